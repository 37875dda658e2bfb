//! Monte Carlo physical-layer simulator used as ground truth for every
//! closed form in the crate.
//!
//! Each trial draws fresh channels, runs the pilot phase and one uplink data
//! symbol, and records scalar observations. Trial `t` always uses substream
//! `t` of the master seed, and partial sums are combined in a fixed tree, so
//! results are bit-identical for any number of worker threads.

mod instances;
mod report;
mod runner;
mod sinr;

pub use report::{
    desired_cross_covariance_printed, estimation_rows, sinr_rows, transmission_rows, verify_moment_identities, write_report_csv, IdentityReport,
    IdentityRow, MIN_AUTHORITATIVE_TRIALS,
};
pub use instances::{reference_instance, ReferenceCase};
pub use runner::{run_observations, VecMoments, CHUNK};
pub use sinr::{empirical_sinr, empirical_sinr_all, EmpiricalSinr};

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_normal, reflect, sample_channels, ChannelSample, SecondOrderStats};
use crate::estimation::{estimate_channels, estimation_stats, EstimationStats, PilotPlan};
use crate::ris::RisState;
use crate::scenario::NetworkRealization;

/// Everything fixed across trials.
#[derive(Debug, Clone)]
pub struct OracleSetup {
    pub net: NetworkRealization,
    pub ris: RisState,
    pub plan: PilotPlan,
    pub stats: SecondOrderStats,
    pub est: EstimationStats,
}

impl OracleSetup {
    pub fn new(net: &NetworkRealization, ris: &RisState, plan: &PilotPlan) -> OracleSetup {
        assert_eq!(plan.tau_p, net.scenario.tau_p, "pilot plan length must match the scenario");
        assert_eq!(plan.num_users(), net.num_users(), "pilot plan must cover every user");
        let stats = crate::channel::compute_stats(net, ris);
        let est = estimation_stats(&net.scenario, &stats, plan);
        OracleSetup {
            net: net.clone(),
            ris: ris.clone(),
            plan: plan.clone(),
            stats,
            est,
        }
    }
}

/// Uplink data-phase observation at every AP.
#[derive(Debug, Clone)]
pub struct DataPhase {
    pub y: DVector<Complex64>,
    /// Amplified RIS noise `p_m = h_m^H Theta v`.
    pub ris_noise: DVector<Complex64>,
    pub ap_noise: DVector<Complex64>,
}

/// One complete trial.
#[derive(Debug, Clone)]
pub struct Trial {
    pub sample: ChannelSample,
    /// Pilot projections `y_mk`.
    pub projections: DMatrix<Complex64>,
    pub q_hat: DMatrix<Complex64>,
    pub symbols: DVector<Complex64>,
    pub data: DataPhase,
}

/// Received pilot block at each AP projected onto every user's pilot,
/// normalized by `sqrt(rho tau_p)`. AP noise is drawn from `rng`.
pub fn simulate_pilot_phase<R: Rng + ?Sized>(
    net: &NetworkRealization,
    ris: &RisState,
    plan: &PilotPlan,
    sample: &ChannelSample,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let scenario = &net.scenario;
    let (m_count, k_count) = (net.num_aps(), net.num_users());
    let tau_p = plan.tau_p;
    let amp = (scenario.pilot_power * tau_p as f64).sqrt();
    let theta = ris.theta_diagonal();
    let pilots: Vec<DVector<Complex64>> = (0..k_count).map(|k| plan.pilot(k)).collect();
    let mut out = DMatrix::zeros(m_count, k_count);
    for m in 0..m_count {
        // y_m = sum_k amp q_mk s_k^H + h_m^H Theta V + w_m, stored as a column.
        let mut y = DVector::from_fn(tau_p, |_, _| complex_normal(scenario.ap_noise, rng));
        for t in 0..tau_p {
            y[t] += reflect(&sample.h[m], &theta, &sample.v_pilot.column(t).into_owned());
        }
        for (k, s) in pilots.iter().enumerate() {
            y += s.map(|v| v.conj()) * (sample.q[(m, k)] * amp);
        }
        for (k, s) in pilots.iter().enumerate() {
            // Row vector times s_k, i.e. sum_t y_t s_k[t].
            let proj: Complex64 = y.iter().zip(s.iter()).map(|(a, b)| a * b).sum();
            out[(m, k)] = proj / amp;
        }
    }
    out
}

/// `y_m = sqrt(rho_u) sum_k q_mk x_k + p_m + w_m` using the sample's
/// data-phase RIS noise and fresh AP noise from `rng`.
pub fn simulate_data_phase<R: Rng + ?Sized>(
    net: &NetworkRealization,
    ris: &RisState,
    sample: &ChannelSample,
    symbols: &DVector<Complex64>,
    rng: &mut R,
) -> DataPhase {
    let scenario = &net.scenario;
    let theta = ris.theta_diagonal();
    let m_count = net.num_aps();
    let ris_noise = DVector::from_fn(m_count, |m, _| reflect(&sample.h[m], &theta, &sample.v_data));
    let ap_noise = DVector::from_fn(m_count, |_, _| complex_normal(scenario.ap_noise, rng));
    let signal = &sample.q * symbols * Complex64::new(scenario.data_power.sqrt(), 0.0);
    let y = signal + &ris_noise + &ap_noise;
    DataPhase { y, ris_noise, ap_noise }
}

/// Unit-modulus data symbols with uniform phase.
pub fn draw_symbols<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DVector<Complex64> {
    DVector::from_fn(k, |_, _| Complex64::from_polar(1.0, TAU * rng.random::<f64>()))
}

/// Draws one trial in the canonical order: channels, pilot AP noise,
/// symbols, data AP noise.
pub fn run_trial<R: Rng + ?Sized>(setup: &OracleSetup, rng: &mut R) -> Trial {
    let sample = sample_channels(&setup.net, &setup.ris, rng);
    let projections = simulate_pilot_phase(&setup.net, &setup.ris, &setup.plan, &sample, rng);
    let q_hat = estimate_channels(&projections, &setup.est);
    let symbols = draw_symbols(setup.net.num_users(), rng);
    let data = simulate_data_phase(&setup.net, &setup.ris, &sample, &symbols, rng);
    Trial {
        sample,
        projections,
        q_hat,
        symbols,
        data,
    }
}
