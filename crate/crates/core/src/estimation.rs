//! Pilot assignment and LMMSE estimation of the aggregated channel.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::SecondOrderStats;
use crate::scenario::{PilotBasis, Scenario};

/// Pilot sequences and the users sharing each one.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotPlan {
    pub tau_p: usize,
    /// Pilot index of each user.
    pub pilot_of: Vec<usize>,
    /// `coset[k]`: users sharing user `k`'s pilot, `k` included, ascending.
    pub coset: Vec<Vec<usize>>,
    /// Columns are the orthonormal pilot sequences.
    pub pilot_matrix: DMatrix<Complex64>,
}

/// Round-robin assignment `pilot_of[k] = k mod tau_p` over canonical pilots.
pub fn assign_pilots(num_users: usize, tau_p: usize) -> PilotPlan {
    assign_pilots_with(num_users, tau_p, PilotBasis::Canonical)
}

pub fn assign_pilots_with(num_users: usize, tau_p: usize, basis: PilotBasis) -> PilotPlan {
    assert!(tau_p >= 1, "pilot length must be at least 1");
    let pilot_of: Vec<usize> = (0..num_users).map(|k| k % tau_p).collect();
    let coset = (0..num_users)
        .map(|k| (0..num_users).filter(|&j| pilot_of[j] == pilot_of[k]).collect())
        .collect();
    let pilot_matrix = match basis {
        PilotBasis::Canonical => DMatrix::identity(tau_p, tau_p),
        PilotBasis::Dft => {
            let norm = 1.0 / (tau_p as f64).sqrt();
            DMatrix::from_fn(tau_p, tau_p, |i, j| {
                Complex64::from_polar(norm, -TAU * (i * j) as f64 / tau_p as f64)
            })
        }
    };
    PilotPlan {
        tau_p,
        pilot_of,
        coset,
        pilot_matrix,
    }
}

impl PilotPlan {
    pub fn for_scenario(scenario: &Scenario) -> PilotPlan {
        assign_pilots_with(scenario.num_users, scenario.tau_p, scenario.pilot_basis)
    }

    pub fn num_users(&self) -> usize {
        self.pilot_of.len()
    }

    /// Pilot sequence `s_k` of user `k`.
    pub fn pilot(&self, k: usize) -> DVector<Complex64> {
        self.pilot_matrix.column(self.pilot_of[k]).into_owned()
    }

    pub fn is_contaminated(&self, k: usize) -> bool {
        self.coset[k].len() > 1
    }
}

/// Per-link LMMSE coefficients, estimate variances and NMSE.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationStats {
    pub c: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub nmse: DMatrix<f64>,
}

/// `rho tau_p kappa_mk / (rho tau_p sum_{P_k} kappa + sigma_bar^2 a^2 tr R_m + sigma^2)`.
pub fn lmmse_coefficient(
    scenario: &Scenario,
    stats: &SecondOrderStats,
    plan: &PilotPlan,
    m: usize,
    k: usize,
) -> f64 {
    let gain = scenario.pilot_power * plan.tau_p as f64;
    let coset_power: f64 = plan.coset[k].iter().map(|&j| stats.kappa[(m, j)]).sum();
    let ris_noise = stats.ris_noise * stats.a * stats.a * stats.tr_r_m(m);
    gain * stats.kappa[(m, k)] / (gain * coset_power + ris_noise + scenario.ap_noise)
}

/// Coefficient with the RIS-noise term written as `sigma_bar^2 a^2 alpha_m N`,
/// i.e. without the element area. Kept for comparison only.
pub fn lmmse_coefficient_printed(
    scenario: &Scenario,
    stats: &SecondOrderStats,
    plan: &PilotPlan,
    m: usize,
    k: usize,
) -> f64 {
    let gain = scenario.pilot_power * plan.tau_p as f64;
    let coset_power: f64 = plan.coset[k].iter().map(|&j| stats.kappa[(m, j)]).sum();
    let ris_noise = stats.ris_noise * stats.a * stats.a * stats.alpha[m] * stats.traces.n;
    gain * stats.kappa[(m, k)] / (gain * coset_power + ris_noise + scenario.ap_noise)
}

pub fn estimation_stats(scenario: &Scenario, stats: &SecondOrderStats, plan: &PilotPlan) -> EstimationStats {
    let (m_count, k_count) = (stats.num_aps(), stats.num_users());
    let c = DMatrix::from_fn(m_count, k_count, |m, k| lmmse_coefficient(scenario, stats, plan, m, k));
    let gamma = c.component_mul(&stats.kappa);
    let nmse = c.map(|x| 1.0 - x);
    EstimationStats { c, gamma, nmse }
}

/// `1 - c_mk`.
pub fn nmse(est: &EstimationStats, m: usize, k: usize) -> f64 {
    1.0 - est.c[(m, k)]
}

/// High-SNR NMSE floor `1 - kappa_mk / sum_{P_k} kappa`.
pub fn nmse_limit(stats: &SecondOrderStats, plan: &PilotPlan, m: usize, k: usize) -> f64 {
    let coset_power: f64 = plan.coset[k].iter().map(|&j| stats.kappa[(m, j)]).sum();
    1.0 - stats.kappa[(m, k)] / coset_power
}

/// Estimates and their errors for one trial.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub q_hat: DMatrix<Complex64>,
    pub error: DMatrix<Complex64>,
}

/// `q_hat = c * y` applied to the per-link pilot projections.
pub fn estimate_channels(projections: &DMatrix<Complex64>, est: &EstimationStats) -> DMatrix<Complex64> {
    projections.zip_map(&est.c, |y, c| y * c)
}

pub fn estimate_with_errors(
    projections: &DMatrix<Complex64>,
    est: &EstimationStats,
    q: &DMatrix<Complex64>,
) -> ChannelEstimate {
    let q_hat = estimate_channels(projections, est);
    let error = q - &q_hat;
    ChannelEstimate { q_hat, error }
}
