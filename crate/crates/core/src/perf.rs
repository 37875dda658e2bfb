//! Closed-form uplink SINR, spectral efficiency and energy efficiency.
//!
//! Two SINR models are available. [`SinrModel::Exact`] is the MRC
//! use-and-then-forget SINR evaluated without approximation; it is what the
//! Monte Carlo oracle reproduces. [`SinrModel::Printed`] assembles the
//! interference exactly as the commonly quoted closed form does, which
//! double counts one coherent term, drops the pilot-phase RIS noise that is
//! common to all APs, and uses `alpha_mk + sigma^2 kappa_mk` as the noise
//! floor. It is kept for comparison.

use crate::channel::{compute_stats, SecondOrderStats};
use crate::estimation::{estimation_stats, EstimationStats, PilotPlan};
use crate::ris::{aris_total_power, RisState};
use crate::scenario::{NetworkRealization, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SinrModel {
    #[default]
    Exact,
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerfOptions {
    pub model: SinrModel,
    /// Scale SE by `1 - tau_p / tau_c`.
    pub prelog: bool,
}

/// Individual addends of the interference term `I2`, each already scaled by `rho_u`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterferenceAddends {
    /// `sum_{k'} sum_{k'' in P_k} sum_{m,m'} c_mk c_m'k tr(Xi_{m,k'} Xi_{m',k''})`.
    pub coherent_xi: f64,
    /// `sum_m gamma_mk^2`.
    pub gamma_sq: f64,
    /// `sum_{k' != k} sum_{k'' in P_k} sum_m c_mk^2 kappa_mk'' kappa_mk'`.
    pub inter_user_kappa: f64,
    /// `(1 / rho tau_p) sum_{k'} sum_m c_mk^2 alpha_mk'`.
    pub active_noise_pilot: f64,
    /// `(sigma^2 / rho tau_p) sum_{k'} sum_m c_mk^2 kappa_mk'`.
    pub ap_noise_pilot: f64,
    /// `sum_{k' in P_k \ k} (sum_m c_mk kappa_mk')^2`.
    pub contamination_square: f64,
    /// Exact model: `sum_{k' in P_k \ k} sum_m c_mk^2 kappa_mk kappa_mk'`.
    /// Printed model: `sum_{k' in P_k} sum_m c_mk^2 kappa_mk'^2`.
    pub contamination_kappa: f64,
    /// `sum_{k' in P_k} sum_m c_mk^2 tr(Xi_mk'^2)`.
    pub contamination_xi_sq: f64,
    /// Exact model only: `(sigma_bar^2 / rho tau_p) sum_{k'} sum_{m != m'} c_mk c_m'k tr(Q_m R_bar_k' Q_m')`.
    pub pilot_ris_noise_cross: f64,
}

impl InterferenceAddends {
    pub fn as_array(&self) -> [f64; 9] {
        [
            self.coherent_xi,
            self.gamma_sq,
            self.inter_user_kappa,
            self.active_noise_pilot,
            self.ap_noise_pilot,
            self.contamination_square,
            self.contamination_kappa,
            self.contamination_xi_sq,
            self.pilot_ris_noise_cross,
        ]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Sum of the addends that only exist under pilot sharing.
    pub fn contamination_only(&self, model: SinrModel) -> f64 {
        match model {
            SinrModel::Exact => self.contamination_square + self.contamination_kappa,
            SinrModel::Printed => self.contamination_square,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub model: SinrModel,
    /// Desired-signal amplitude `sqrt(rho_u) sum_m gamma_mk`.
    pub i1: f64,
    pub i2_terms: InterferenceAddends,
    /// Active-noise plus AP-noise floor.
    pub i3: f64,
    pub gamma_k: f64,
}

struct Ctx<'a> {
    stats: &'a SecondOrderStats,
    est: &'a EstimationStats,
    plan: &'a PilotPlan,
    rho_u: f64,
    eps: f64,
    sigma2: f64,
}

impl<'a> Ctx<'a> {
    fn new(scenario: &Scenario, stats: &'a SecondOrderStats, est: &'a EstimationStats, plan: &'a PilotPlan) -> Self {
        Ctx {
            stats,
            est,
            plan,
            rho_u: scenario.data_power,
            eps: 1.0 / (scenario.pilot_power * plan.tau_p as f64),
            sigma2: scenario.ap_noise,
        }
    }
}

/// Closed-form SINR of user `k` under the exact model.
pub fn sinr_closed_form(
    scenario: &Scenario,
    stats: &SecondOrderStats,
    est: &EstimationStats,
    plan: &PilotPlan,
    k: usize,
) -> SinrBreakdown {
    sinr_closed_form_with(SinrModel::Exact, scenario, stats, est, plan, k)
}

pub fn sinr_closed_form_with(
    model: SinrModel,
    scenario: &Scenario,
    stats: &SecondOrderStats,
    est: &EstimationStats,
    plan: &PilotPlan,
    k: usize,
) -> SinrBreakdown {
    let cx = Ctx::new(scenario, stats, est, plan);
    let (m_count, k_count) = (stats.num_aps(), stats.num_users());
    let coset = &plan.coset[k];
    let c = |m: usize| est.c[(m, k)];
    let kappa = |m: usize, j: usize| stats.kappa[(m, j)];
    let rho_u = cx.rho_u;

    let mut t = InterferenceAddends::default();
    for j in 0..k_count {
        for &i in coset {
            for m in 0..m_count {
                for m2 in 0..m_count {
                    t.coherent_xi += c(m) * c(m2) * stats.tr_xi_xi(m, j, m2, i);
                }
            }
        }
    }
    t.gamma_sq = (0..m_count).map(|m| est.gamma[(m, k)].powi(2)).sum();
    for j in (0..k_count).filter(|&j| j != k) {
        for &i in coset {
            t.inter_user_kappa += (0..m_count).map(|m| c(m).powi(2) * kappa(m, i) * kappa(m, j)).sum::<f64>();
        }
    }
    for j in 0..k_count {
        for m in 0..m_count {
            t.active_noise_pilot += cx.eps * c(m).powi(2) * stats.alpha_an[(m, j)];
            t.ap_noise_pilot += cx.eps * cx.sigma2 * c(m).powi(2) * kappa(m, j);
        }
    }
    for &j in coset.iter().filter(|&&j| j != k) {
        t.contamination_square += (0..m_count).map(|m| c(m) * kappa(m, j)).sum::<f64>().powi(2);
    }
    t.contamination_kappa = match model {
        SinrModel::Exact => coset
            .iter()
            .filter(|&&j| j != k)
            .map(|&j| (0..m_count).map(|m| c(m).powi(2) * kappa(m, k) * kappa(m, j)).sum::<f64>())
            .sum(),
        SinrModel::Printed => coset
            .iter()
            .map(|&j| (0..m_count).map(|m| c(m).powi(2) * kappa(m, j).powi(2)).sum::<f64>())
            .sum(),
    };
    for &j in coset {
        t.contamination_xi_sq += (0..m_count).map(|m| c(m).powi(2) * stats.tr_xi_xi(m, j, m, j)).sum::<f64>();
    }
    if model == SinrModel::Exact {
        for j in 0..k_count {
            for m in 0..m_count {
                for m2 in (0..m_count).filter(|&m2| m2 != m) {
                    t.pilot_ris_noise_cross += cx.eps * stats.ris_noise * c(m) * c(m2) * stats.tr_q_rbar_q(m, j, m2);
                }
            }
        }
    }
    let arr = t.as_array().map(|x| x * rho_u);
    t = InterferenceAddends {
        coherent_xi: arr[0],
        gamma_sq: arr[1],
        inter_user_kappa: arr[2],
        active_noise_pilot: arr[3],
        ap_noise_pilot: arr[4],
        contamination_square: arr[5],
        contamination_kappa: arr[6],
        contamination_xi_sq: arr[7],
        pilot_ris_noise_cross: arr[8],
    };

    let i3 = match model {
        SinrModel::Exact => {
            let g = term_groups_inner(&cx, k);
            g.an + g.no
        }
        SinrModel::Printed => (0..m_count)
            .map(|m| stats.alpha_an[(m, k)] + cx.sigma2 * kappa(m, k))
            .sum(),
    };
    let i1 = rho_u.sqrt() * (0..m_count).map(|m| est.gamma[(m, k)]).sum::<f64>();
    let denom = t.total() + i3;
    let gamma_k = if i1 == 0.0 { 0.0 } else { i1 * i1 / denom };
    SinrBreakdown {
        model,
        i1,
        i2_terms: t,
        i3,
        gamma_k,
    }
}

/// The five expectation groups of the MRC decision statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct TermGroups {
    /// `|E{desired}|^2 = rho_u (sum_m gamma_mk)^2`.
    pub ds: f64,
    /// Beamforming uncertainty, the variance of the desired term.
    pub bu: f64,
    /// Interference from each user; entry `k` is zero.
    pub ui: Vec<f64>,
    /// Amplified RIS noise during data.
    pub an: f64,
    /// AP noise.
    pub no: f64,
}

impl TermGroups {
    pub fn sinr(&self) -> f64 {
        if self.ds == 0.0 {
            return 0.0;
        }
        self.ds / (self.bu + self.ui.iter().sum::<f64>() + self.an + self.no)
    }
}

/// Exact expectation groups for user `k`, computed directly from
/// `E|sum_m q_hat_mk^* q_mj|^2` for every `j`.
pub fn term_groups(
    scenario: &Scenario,
    stats: &SecondOrderStats,
    est: &EstimationStats,
    plan: &PilotPlan,
    k: usize,
) -> TermGroups {
    term_groups_inner(&Ctx::new(scenario, stats, est, plan), k)
}

fn term_groups_inner(cx: &Ctx<'_>, k: usize) -> TermGroups {
    let (stats, est, plan) = (cx.stats, cx.est, cx.plan);
    let (m_count, k_count) = (stats.num_aps(), stats.num_users());
    let coset = &plan.coset[k];
    let c = |m: usize| est.c[(m, k)];
    let kappa = |m: usize, j: usize| stats.kappa[(m, j)];
    let sbar = stats.ris_noise;

    // E|sum_m q_hat_mk^* q_mj|^2
    let second_moment = |j: usize| -> f64 {
        let shares = coset.contains(&j);
        let mut total = 0.0;
        for m in 0..m_count {
            for m2 in 0..m_count {
                let w = c(m) * c(m2);
                let mut term = 0.0;
                if m == m2 {
                    if shares {
                        term += kappa(m, j).powi(2) + stats.tr_xi_xi(m, j, m, j);
                    }
                    for &i in coset {
                        term += kappa(m, i) * kappa(m, j) + stats.tr_xi_xi(m, i, m, j);
                    }
                    term += cx.eps * (stats.alpha_an[(m, j)] + cx.sigma2 * kappa(m, j));
                } else {
                    if shares {
                        term += kappa(m, j) * kappa(m2, j);
                    }
                    for &i in coset {
                        term += stats.tr_xi_xi(m, i, m2, j);
                    }
                    term += cx.eps * sbar * stats.tr_q_rbar_q(m, j, m2);
                }
                total += w * term;
            }
        }
        total
    };

    let mean: f64 = (0..m_count).map(|m| est.gamma[(m, k)]).sum();
    let ds = cx.rho_u * mean * mean;
    let bu = cx.rho_u * second_moment(k) - ds;
    let ui = (0..k_count)
        .map(|j| if j == k { 0.0 } else { cx.rho_u * second_moment(j) })
        .collect();

    let mut an = 0.0;
    for m in 0..m_count {
        for m2 in 0..m_count {
            let w = c(m) * c(m2);
            if m == m2 {
                let tq = stats.tr_q(m);
                let pilot = cx.eps * sbar * (sbar * (tq * tq + stats.tr_q_q(m, m)) + cx.sigma2 * tq);
                an += w * (coset.iter().map(|&i| stats.alpha_an[(m, i)]).sum::<f64>() + pilot);
            } else {
                let chan: f64 = coset.iter().map(|&i| stats.tr_q_rbar_q(m, i, m2)).sum();
                an += w * sbar * (chan + cx.eps * sbar * stats.tr_q_q(m, m2));
            }
        }
    }
    let no = cx.sigma2 * (0..m_count).map(|m| est.gamma[(m, k)]).sum::<f64>();
    TermGroups { ds, bu, ui, an, no }
}

/// `log2(1 + gamma)`, optionally scaled by `1 - tau_p / tau_c`.
pub fn se_per_user(gamma_k: f64, prelog_enabled: bool, tau_p: usize, tau_c: usize) -> f64 {
    let se = (1.0 + gamma_k).log2();
    if prelog_enabled {
        se * (1.0 - tau_p as f64 / tau_c as f64)
    } else {
        se
    }
}

pub fn sum_se(
    scenario: &Scenario,
    stats: &SecondOrderStats,
    est: &EstimationStats,
    plan: &PilotPlan,
    opts: PerfOptions,
) -> f64 {
    (0..stats.num_users())
        .map(|k| {
            let g = sinr_closed_form_with(opts.model, scenario, stats, est, plan, k).gamma_k;
            se_per_user(g, opts.prelog, plan.tau_p, scenario.tau_c)
        })
        .sum()
}

/// Components of the total consumed power, in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub users: f64,
    pub backhaul: f64,
    pub ris: f64,
}

impl PowerBudget {
    pub fn total(&self) -> f64 {
        self.users + self.backhaul + self.ris
    }
}

/// Each AP carries an equal `1/M` share of the sum rate over its backhaul.
pub fn power_budget(scenario: &Scenario, sum_se_value: f64, alpha_bar: &[f64], a: f64) -> PowerBudget {
    let m = scenario.num_aps as f64;
    let users = scenario.num_users as f64 * scenario.pa_efficiency * scenario.data_power;
    let per_ap_rate = scenario.bandwidth * sum_se_value / m;
    let backhaul = m * (scenario.backhaul_fixed_power + per_ap_rate * scenario.backhaul_traffic_power);
    let ris = aris_total_power(scenario, alpha_bar, a);
    PowerBudget { users, backhaul, ris }
}

/// Bits per joule: `B * sum SE / P_total`.
pub fn energy_efficiency(scenario: &Scenario, sum_se_value: f64, alpha_bar: &[f64], a: f64) -> f64 {
    if sum_se_value == 0.0 {
        return 0.0;
    }
    scenario.bandwidth * sum_se_value / power_budget(scenario, sum_se_value, alpha_bar, a).total()
}

/// Everything the closed forms produce for one RIS state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub stats: SecondOrderStats,
    pub est: EstimationStats,
    pub sinr: Vec<f64>,
    pub se: Vec<f64>,
    pub sum_se: f64,
}

impl Evaluation {
    pub fn nmse_mean(&self) -> f64 {
        self.est.nmse.mean()
    }
}

pub fn evaluate(net: &NetworkRealization, ris: &RisState, plan: &PilotPlan, opts: PerfOptions) -> Evaluation {
    let scenario = &net.scenario;
    let stats = compute_stats(net, ris);
    let est = estimation_stats(scenario, &stats, plan);
    let sinr: Vec<f64> = (0..net.num_users())
        .map(|k| sinr_closed_form_with(opts.model, scenario, &stats, &est, plan, k).gamma_k)
        .collect();
    let se: Vec<f64> = sinr
        .iter()
        .map(|&g| se_per_user(g, opts.prelog, plan.tau_p, scenario.tau_c))
        .collect();
    let sum_se = se.iter().sum();
    Evaluation {
        stats,
        est,
        sinr,
        se,
        sum_se,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::assign_pilots;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn instance(k: usize, tau_p: usize) -> (Scenario, NetworkRealization) {
        let mut s = Scenario::default();
        s.num_aps = 3;
        s.num_users = k;
        s.n_h = 2;
        s.n_v = 2;
        s.tau_p = tau_p;
        s.d_h = s.wavelength / 4.0;
        s.d_v = s.wavelength / 4.0;
        s.pilot_power = 1.0;
        s.data_power = 1.0;
        s.ap_noise = 0.3;
        s.ris_noise = 0.2;
        let area = s.d_h * s.d_v;
        let beta = DMatrix::from_fn(3, k, |m, j| 0.2 + 0.3 * ((m * 7 + j * 3) % 5) as f64);
        let alpha = vec![0.5 / area, 1.0 / area, 0.8 / area];
        let alpha_bar = (0..k).map(|j| (0.6 + 0.2 * j as f64) / area).collect();
        let net = NetworkRealization::from_gains(&s, beta, alpha, alpha_bar).unwrap();
        (s, net)
    }

    fn setup(k: usize, tau_p: usize, phases: Vec<f64>, a: f64) -> (Scenario, SecondOrderStats, EstimationStats, PilotPlan) {
        let (s, net) = instance(k, tau_p);
        let stats = compute_stats(&net, &RisState::new(phases, a));
        let plan = assign_pilots(k, tau_p);
        let est = estimation_stats(&s, &stats, &plan);
        (s, stats, est, plan)
    }

    #[test]
    fn se_examples() {
        assert_eq!(se_per_user(1.0, false, 1, 2), 1.0);
        assert_eq!(se_per_user(3.0, false, 1, 2), 2.0);
        assert_eq!(se_per_user(0.0, false, 1, 2), 0.0);
        assert_relative_eq!(se_per_user(3.0, true, 15, 200), 2.0 * (1.0 - 15.0 / 200.0));
    }

    #[test]
    fn zero_data_power_gives_zero_sinr() {
        let (mut s, stats, est, plan) = setup(3, 2, vec![0.0; 4], 1.0);
        s.data_power = 0.0;
        for model in [SinrModel::Exact, SinrModel::Printed] {
            assert_eq!(sinr_closed_form_with(model, &s, &stats, &est, &plan, 0).gamma_k, 0.0);
        }
    }

    #[test]
    fn noise_increase_lowers_sinr() {
        let (s, net) = instance(3, 2);
        let ris = RisState::new(vec![0.3, 1.0, 2.0, 2.5], 1.5);
        let plan = assign_pilots(3, 2);
        let base = evaluate(&net, &ris, &plan, PerfOptions::default());
        let mut s2 = s.clone();
        s2.ap_noise *= 2.0;
        let net2 = NetworkRealization::from_gains(&s2, net.beta.clone(), net.alpha.clone(), net.alpha_bar.clone()).unwrap();
        let worse = evaluate(&net2, &ris, &plan, PerfOptions::default());
        for k in 0..3 {
            assert!(worse.sinr[k] < base.sinr[k]);
        }
    }

    #[test]
    fn single_user_sum_equals_user_se() {
        let (s, stats, est, plan) = setup(1, 1, vec![0.1, 0.2, 0.3, 0.4], 1.0);
        let g = sinr_closed_form(&s, &stats, &est, &plan, 0).gamma_k;
        assert_relative_eq!(sum_se(&s, &stats, &est, &plan, PerfOptions::default()), se_per_user(g, false, 1, 200));
    }

    #[test]
    fn energy_efficiency_transcription() {
        let s = Scenario::default();
        let alpha_bar = vec![1e-8; s.num_users];
        let (se, a) = (37.5, 4.0);
        assert_eq!(energy_efficiency(&s, 0.0, &alpha_bar, a), 0.0);
        let n = 64.0;
        let lambda = 299_792_458.0 / 1.9e9;
        let area = lambda * lambda / 16.0;
        let p_out = a * a * n * (0.1 * area * 15.0 * 1e-8 + 1e-11);
        let p_ris = n * (1e-4 + 10f64.powf(-0.5) * 1e-3) + p_out / 0.8;
        let p_users = 15.0 * 0.4 * 0.1;
        let p_bh = 20.0 * (0.825 + 20e6 * (se / 20.0) * 0.25e-9);
        let expected = 20e6 * se / (p_users + p_bh + p_ris);
        assert_relative_eq!(energy_efficiency(&s, se, &alpha_bar, a), expected, max_relative = 1e-12);
        let mut s2 = s.clone();
        s2.backhaul_traffic_power = 0.0;
        s2.bandwidth *= 2.0;
        let mut s1 = s.clone();
        s1.backhaul_traffic_power = 0.0;
        assert_relative_eq!(
            energy_efficiency(&s2, se, &alpha_bar, a),
            2.0 * energy_efficiency(&s1, se, &alpha_bar, a),
            max_relative = 1e-12
        );
    }

    #[test]
    fn printed_model_differs_only_where_expected() {
        // Without RIS noise, pilot sharing, or the double-counted term the two
        // models would agree; with them they must not.
        let (s, stats, est, plan) = setup(3, 2, vec![0.0, 1.0, 2.0, 3.0], 1.2);
        let exact = sinr_closed_form_with(SinrModel::Exact, &s, &stats, &est, &plan, 0);
        let printed = sinr_closed_form_with(SinrModel::Printed, &s, &stats, &est, &plan, 0);
        assert_eq!(exact.i1, printed.i1);
        assert_eq!(exact.i2_terms.coherent_xi, printed.i2_terms.coherent_xi);
        assert_eq!(printed.i2_terms.pilot_ris_noise_cross, 0.0);
        assert!(exact.gamma_k != printed.gamma_k);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn addends_sum_to_groups(
            phases in prop::collection::vec(0.0f64..6.3, 4),
            a in 0.0f64..3.0,
            k_count in 1usize..5,
            tau_p in 1usize..4,
        ) {
            let tau_p = tau_p.min(k_count);
            let (s, stats, est, plan) = setup(k_count, tau_p, phases, a);
            for k in 0..k_count {
                let b = sinr_closed_form(&s, &stats, &est, &plan, k);
                let g = term_groups(&s, &stats, &est, &plan, k);
                let lhs = b.i2_terms.total();
                let rhs = g.bu + g.ui.iter().sum::<f64>();
                prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
                prop_assert!((b.i3 - g.an - g.no).abs() <= 1e-12 * b.i3);
                prop_assert!((b.i1 * b.i1 - g.ds).abs() <= 1e-12 * g.ds);
                prop_assert!((b.gamma_k - g.sinr()).abs() <= 1e-10 * g.sinr());
                for x in b.i2_terms.as_array() {
                    prop_assert!(x >= 0.0);
                }
                prop_assert!(b.i3 > 0.0);
                prop_assert!(g.bu >= 0.0);
                if !plan.is_contaminated(k) {
                    prop_assert_eq!(b.i2_terms.contamination_only(SinrModel::Exact), 0.0);
                    let p = sinr_closed_form_with(SinrModel::Printed, &s, &stats, &est, &plan, k);
                    prop_assert_eq!(p.i2_terms.contamination_only(SinrModel::Printed), 0.0);
                }
            }
        }

        #[test]
        fn sum_se_symmetries(phases in prop::collection::vec(0.0f64..6.3, 4), phi in 0.0f64..6.3, perm_seed in 0usize..6) {
            let (s, net) = instance(3, 3);
            let plan = assign_pilots(3, 3);
            let ris = RisState::new(phases, 1.4);
            let base = evaluate(&net, &ris, &plan, PerfOptions::default()).sum_se;
            let rotated = evaluate(&net, &ris.rotated(phi), &plan, PerfOptions::default()).sum_se;
            prop_assert!((base - rotated).abs() < 1e-10 * base);
            // Permute users (singleton cosets keep the plan valid) and APs.
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let p = perms[perm_seed];
            let beta = DMatrix::from_fn(3, 3, |m, k| net.beta[(p[m], p[k])]);
            let alpha = p.iter().map(|&m| net.alpha[m]).collect();
            let alpha_bar = p.iter().map(|&k| net.alpha_bar[k]).collect();
            let permuted = NetworkRealization::from_gains(&s, beta, alpha, alpha_bar).unwrap();
            let ev = evaluate(&permuted, &ris, &plan, PerfOptions::default());
            prop_assert!((base - ev.sum_se).abs() < 1e-10 * base);
        }
    }
}
