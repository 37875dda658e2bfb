//! Active RIS reflection model and power accounting.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::scenario::Scenario;

/// Which branch of the amplitude-gain formula produced the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainBranch {
    /// Capped at `a_max`.
    Saturated,
    /// Power budget is binding.
    Budget,
    /// Static consumption already exceeds the budget; `a = 0`.
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeGain {
    pub value: f64,
    pub branch: GainBranch,
}

impl AmplitudeGain {
    /// Budget-exhausted warning flag.
    pub fn exhausted(&self) -> bool {
        self.branch == GainBranch::Exhausted
    }
}

/// Budget-limited gain `sqrt(xi (P_aris - N(P_c + P_dc)) / (N(rho_u d_H d_V sum alpha_bar + sigma_bar^2)))`,
/// capped at `a_max`.
pub fn amplitude_gain(scenario: &Scenario, alpha_bar: &[f64]) -> AmplitudeGain {
    let n = scenario.num_elements() as f64;
    let headroom = scenario.ris_power_budget - n * (scenario.circuit_power + scenario.dc_power);
    if headroom <= 0.0 {
        return AmplitudeGain {
            value: 0.0,
            branch: GainBranch::Exhausted,
        };
    }
    let per_unit_gain = output_power_per_unit_gain(scenario, alpha_bar);
    let a = (scenario.amp_efficiency * headroom / per_unit_gain).sqrt();
    if a >= scenario.a_max {
        AmplitudeGain {
            value: scenario.a_max,
            branch: GainBranch::Saturated,
        }
    } else {
        AmplitudeGain {
            value: a,
            branch: GainBranch::Budget,
        }
    }
}

fn output_power_per_unit_gain(scenario: &Scenario, alpha_bar: &[f64]) -> f64 {
    let n = scenario.num_elements() as f64;
    let sum_alpha_bar: f64 = alpha_bar.iter().sum();
    n * (scenario.data_power * scenario.element_area() * sum_alpha_bar + scenario.ris_noise)
}

/// Amplified output power `a^2 N (rho_u d_H d_V sum alpha_bar + sigma_bar^2)`.
pub fn aris_output_power(scenario: &Scenario, alpha_bar: &[f64], a: f64) -> f64 {
    a * a * output_power_per_unit_gain(scenario, alpha_bar)
}

/// Total RIS consumption `N(P_c + P_dc) + P_out / xi`.
pub fn aris_total_power(scenario: &Scenario, alpha_bar: &[f64], a: f64) -> f64 {
    let n = scenario.num_elements() as f64;
    n * (scenario.circuit_power + scenario.dc_power)
        + aris_output_power(scenario, alpha_bar, a) / scenario.amp_efficiency
}

/// Diagonal `Theta = a diag(e^{j psi_n})`.
pub fn reflection_matrix(phases: &[f64], a: f64) -> DMatrix<Complex64> {
    let diag: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(a, p)).collect();
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
}

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Phase configuration plus the common amplitude gain.
#[derive(Debug, Clone, PartialEq)]
pub struct RisState {
    phases: Vec<f64>,
    a: f64,
}

impl RisState {
    /// Phases are wrapped into `[0, 2 pi)`.
    pub fn new(phases: Vec<f64>, a: f64) -> RisState {
        assert!(a >= 0.0 && a.is_finite(), "amplitude gain must be finite and non-negative");
        RisState {
            phases: phases.into_iter().map(wrap_phase).collect(),
            a,
        }
    }

    pub fn equal(n: usize, a: f64) -> RisState {
        RisState::new(vec![0.0; n], a)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, a: f64, rng: &mut R) -> RisState {
        RisState::new((0..n).map(|_| TAU * rng.random::<f64>()).collect(), a)
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn num_elements(&self) -> usize {
        self.phases.len()
    }

    /// Diagonal of `Theta`.
    pub fn theta_diagonal(&self) -> Vec<Complex64> {
        self.phases.iter().map(|&p| Complex64::from_polar(self.a, p)).collect()
    }

    pub fn theta(&self) -> DMatrix<Complex64> {
        reflection_matrix(&self.phases, self.a)
    }

    /// Same phases rotated by `phi`.
    pub fn rotated(&self, phi: f64) -> RisState {
        RisState::new(self.phases.iter().map(|p| p + phi).collect(), self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn toy() -> Scenario {
        let mut s = Scenario::default();
        s.n_h = 1;
        s.n_v = 1;
        s.num_users = 1;
        s.amp_efficiency = 1.0;
        s.ris_noise = 1.0;
        s.circuit_power = 0.5;
        s.dc_power = 0.5;
        s.ris_power_budget = 5.0;
        s.a_max = 10.0;
        s
    }

    #[test]
    fn hand_evaluated_gain() {
        // No user term: sqrt(1 * 4 / (1 * 1)) = 2.
        let g = amplitude_gain(&toy(), &[]);
        assert_eq!(g.value, 2.0);
        assert_eq!(g.branch, GainBranch::Budget);
    }

    #[test]
    fn exhausted_budget() {
        let mut s = toy();
        s.ris_power_budget = 1.0;
        let g = amplitude_gain(&s, &[1e-6]);
        assert_eq!(g.value, 0.0);
        assert!(g.exhausted());
    }

    #[test]
    fn saturates_at_a_max() {
        let mut s = toy();
        s.ris_power_budget = 1e6;
        let g = amplitude_gain(&s, &[]);
        assert_eq!((g.value, g.branch), (10.0, GainBranch::Saturated));
    }

    #[test]
    fn default_scenario_gain_matches_transcription() {
        // Independent evaluation for N = 64, xi = 0.8, P_aris = 1 W,
        // P_c + P_dc = 1e-4 + 10^-0.5 * 1e-3 W, sigma_bar^2 = 1e-11 W,
        // rho_u = 0.1 W, d = lambda / 4, sum alpha_bar = 3e-8.
        let s = Scenario::default();
        let lambda = 299_792_458.0 / 1.9e9;
        let area = (lambda / 4.0) * (lambda / 4.0);
        let pc = 1e-4 + 10f64.powf(-0.5) * 1e-3;
        let expected = (0.8 * (1.0 - 64.0 * pc) / (64.0 * (0.1 * area * 3e-8 + 1e-11))).sqrt();
        let g = amplitude_gain(&s, &[1e-8, 2e-8]);
        assert_eq!(g.branch, GainBranch::Saturated);
        assert!(expected > s.a_max);
        let mut s2 = s.clone();
        s2.a_max = 1e9;
        assert_relative_eq!(amplitude_gain(&s2, &[1e-8, 2e-8]).value, expected, max_relative = 1e-12);
    }

    #[test]
    fn reflection_examples() {
        let id = reflection_matrix(&[0.0; 3], 1.0);
        assert_eq!(id, DMatrix::identity(3, 3));
        let m = reflection_matrix(&[PI; 3], 2.0);
        for i in 0..3 {
            assert_relative_eq!(m[(i, i)].re, -2.0, max_relative = 1e-15);
            assert!(m[(i, i)].im.abs() < 1e-15);
        }
    }

    #[test]
    fn output_power_examples() {
        let s = toy();
        assert_eq!(aris_output_power(&s, &[0.3], 0.0), 0.0);
        let p1 = aris_output_power(&s, &[0.3], 1.5);
        let p2 = aris_output_power(&s, &[0.3], 3.0);
        assert_relative_eq!(p2, 4.0 * p1, max_relative = 1e-15);
    }

    #[test]
    fn phases_wrap_into_half_open_range() {
        let st = RisState::new(vec![2.0 * PI, -0.5, 7.0], 1.0);
        assert_eq!(st.phases()[0], 0.0);
        assert!(st.phases().iter().all(|&p| (0.0..2.0 * PI).contains(&p)));
    }

    proptest! {
        #[test]
        fn theta_structure(phases in prop::collection::vec(0.0f64..10.0, 1..9), a in 0.0f64..5.0) {
            let th = reflection_matrix(&phases, a);
            let n = phases.len();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        prop_assert!((th[(i, j)].norm() - a).abs() <= 1e-12 * a.max(1.0));
                    } else {
                        prop_assert_eq!(th[(i, j)], Complex64::new(0.0, 0.0));
                    }
                }
            }
        }

        #[test]
        fn budget_round_trip(n in 1usize..64, budget in 0.5f64..50.0, ab in prop::collection::vec(1e-9f64..1e-5, 1..6)) {
            let mut s = Scenario::default();
            s.n_h = n;
            s.n_v = 1;
            s.num_users = ab.len();
            s.ris_power_budget = budget;
            s.a_max = 1e12;
            let g = amplitude_gain(&s, &ab);
            prop_assume!(g.branch == GainBranch::Budget);
            let total = aris_total_power(&s, &ab, g.value);
            prop_assert!(((total - budget) / budget).abs() <= 1e-12);
        }
    }
}
