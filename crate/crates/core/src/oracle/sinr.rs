use num_complex::Complex64;

use super::{run_observations, run_trial, OracleSetup};
use crate::estimation::PilotPlan;
use crate::ris::RisState;
use crate::scenario::NetworkRealization;

/// Below this many trials the estimates carry a wide-confidence warning.
pub const MIN_SINR_TRIALS: u64 = 10_000;

/// Sample-mean estimates of the five expectation groups for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSinr {
    pub k: usize,
    /// `|E_DS|^2 / (BU + sum UI + AN + NO)`.
    pub gamma: f64,
    /// The same ratio formed from the decision statistic `r_k` directly:
    /// `|E{r x^*}|^2 / (E|r|^2 - |E{r x^*}|^2)`.
    pub gamma_direct: f64,
    /// `rho_u |E{sum_m q_hat^* q}|^2`.
    pub ds: f64,
    pub bu: f64,
    /// Entry `k` is zero.
    pub ui: Vec<f64>,
    pub an: f64,
    pub no: f64,
    pub ds_se: f64,
    pub bu_se: f64,
    pub ui_se: Vec<f64>,
    pub an_se: f64,
    pub no_se: f64,
    pub n_trials: u64,
    pub low_trials_warning: bool,
}

/// Empirical SINR of every user from one shared set of trials.
pub fn empirical_sinr_all(
    net: &NetworkRealization,
    ris: &RisState,
    plan: &PilotPlan,
    n_trials: u64,
    master_seed: u64,
) -> Vec<EmpiricalSinr> {
    let setup = OracleSetup::new(net, ris, plan);
    let (m_count, k_count) = (net.num_aps(), net.num_users());
    let per_user = 8 + k_count;
    let rho_u = net.scenario.data_power;
    let sqrt_rho_u = rho_u.sqrt();

    let moments = run_observations(n_trials, master_seed, per_user * k_count, |rng, obs| {
        let t = run_trial(&setup, rng);
        for k in 0..k_count {
            let o = &mut obs[k * per_user..(k + 1) * per_user];
            let combine = |j: usize| -> Complex64 { (0..m_count).map(|m| t.q_hat[(m, k)].conj() * t.sample.q[(m, j)]).sum() };
            let desired = combine(k);
            o[0] = desired.re;
            o[1] = desired.im;
            o[2] = desired.norm_sqr();
            let mut r = desired * t.symbols[k] * sqrt_rho_u;
            for j in (0..k_count).filter(|&j| j != k) {
                let u = combine(j);
                o[3 + j] = u.norm_sqr();
                r += u * t.symbols[j] * sqrt_rho_u;
            }
            let an: Complex64 = (0..m_count).map(|m| t.q_hat[(m, k)].conj() * t.data.ris_noise[m]).sum();
            let no: Complex64 = (0..m_count).map(|m| t.q_hat[(m, k)].conj() * t.data.ap_noise[m]).sum();
            r += an + no;
            o[3 + k_count] = an.norm_sqr();
            o[4 + k_count] = no.norm_sqr();
            let rx = r * t.symbols[k].conj();
            o[5 + k_count] = rx.re;
            o[6 + k_count] = rx.im;
            o[7 + k_count] = r.norm_sqr();
        }
    });

    (0..k_count)
        .map(|k| {
            let b = k * per_user;
            let mean_re = moments.mean(b);
            let mean_im = moments.mean(b + 1);
            let mean_abs = (mean_re * mean_re + mean_im * mean_im).sqrt();
            let ds = rho_u * mean_abs * mean_abs;
            let bu = rho_u * (moments.mean(b + 2) - mean_abs * mean_abs);
            let ui: Vec<f64> = (0..k_count)
                .map(|j| if j == k { 0.0 } else { rho_u * moments.mean(b + 3 + j) })
                .collect();
            let ui_se = (0..k_count)
                .map(|j| if j == k { 0.0 } else { rho_u * moments.std_err(b + 3 + j) })
                .collect();
            let an = moments.mean(b + 3 + k_count);
            let no = moments.mean(b + 4 + k_count);
            let denom = bu + ui.iter().sum::<f64>() + an + no;
            let rx = Complex64::new(moments.mean(b + 5 + k_count), moments.mean(b + 6 + k_count));
            let direct_signal = rx.norm_sqr();
            EmpiricalSinr {
                k,
                gamma: ds / denom,
                gamma_direct: direct_signal / (moments.mean(b + 7 + k_count) - direct_signal),
                ds,
                bu,
                ui,
                an,
                no,
                ds_se: 2.0 * rho_u * mean_abs * moments.std_err(b),
                bu_se: rho_u * moments.std_err(b + 2),
                ui_se,
                an_se: moments.std_err(b + 3 + k_count),
                no_se: moments.std_err(b + 4 + k_count),
                n_trials,
                low_trials_warning: n_trials < MIN_SINR_TRIALS,
            }
        })
        .collect()
}

/// Empirical SINR of user `k`.
pub fn empirical_sinr(
    net: &NetworkRealization,
    ris: &RisState,
    plan: &PilotPlan,
    k: usize,
    n_trials: u64,
    master_seed: u64,
) -> EmpiricalSinr {
    empirical_sinr_all(net, ris, plan, n_trials, master_seed).swap_remove(k)
}
