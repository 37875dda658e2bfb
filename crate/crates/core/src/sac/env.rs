use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimation::PilotPlan;
use crate::perf::{evaluate, PerfOptions};
use crate::ris::{amplitude_gain, wrap_phase, RisState};
use crate::scenario::NetworkRealization;

/// `psi_n = pi (a_n + 1)` wrapped into `[0, 2 pi)`.
pub fn action_to_phases(action: &[f64]) -> Vec<f64> {
    action.iter().map(|&x| wrap_phase(PI * (x + 1.0))).collect()
}

/// Phase-design environment on one fixed realization.
///
/// Observation: `[psi_n / pi - 1 (N) || gamma_mk / gamma_mk(equal phases) (M K)]`,
/// with `gamma` flattened AP-major. The reward is the closed-form sum SE of
/// the phases chosen by the action; it never reads the observation.
#[derive(Debug, Clone)]
pub struct RisEnv {
    net: NetworkRealization,
    plan: PilotPlan,
    opts: PerfOptions,
    a: f64,
    phases: Vec<f64>,
    gamma_ref: Vec<f64>,
    observation: Vec<f64>,
}

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub phases: Vec<f64>,
}

impl RisEnv {
    /// Uses the amplitude gain the power budget allows for this realization.
    pub fn new(net: NetworkRealization, opts: PerfOptions) -> Result<RisEnv> {
        let a = amplitude_gain(&net.scenario, &net.alpha_bar).value;
        RisEnv::with_gain(net, a, opts)
    }

    pub fn with_gain(net: NetworkRealization, a: f64, opts: PerfOptions) -> Result<RisEnv> {
        let plan = PilotPlan::for_scenario(&net.scenario);
        let n = net.num_elements();
        let eq = evaluate(&net, &RisState::equal(n, a), &plan, opts);
        let gamma_ref = flatten(&eq.est.gamma);
        if gamma_ref.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::InvalidScenario("estimate variance must be positive".into()));
        }
        let mut env = RisEnv {
            net,
            plan,
            opts,
            a,
            phases: vec![0.0; n],
            gamma_ref,
            observation: Vec::new(),
        };
        env.observation = env.observe(&eq.est.gamma);
        Ok(env)
    }

    pub fn network(&self) -> &NetworkRealization {
        &self.net
    }

    pub fn gain(&self) -> f64 {
        self.a
    }

    pub fn plan(&self) -> &PilotPlan {
        &self.plan
    }

    pub fn options(&self) -> PerfOptions {
        self.opts
    }

    pub fn action_dim(&self) -> usize {
        self.net.num_elements()
    }

    pub fn observation_dim(&self) -> usize {
        self.net.num_elements() + self.net.num_aps() * self.net.num_users()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn observation(&self) -> &[f64] {
        &self.observation
    }

    /// Closed-form sum SE of `phases` at this environment's gain.
    pub fn sum_se(&self, phases: &[f64]) -> f64 {
        evaluate(&self.net, &RisState::new(phases.to_vec(), self.a), &self.plan, self.opts).sum_se
    }

    /// Redraws phases uniformly and returns the new observation.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let phases: Vec<f64> = (0..self.action_dim()).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        self.apply(phases).observation
    }

    /// Applies a squashed action in `[-1, 1]^N`.
    pub fn step(&mut self, action: &[f64]) -> StepResult {
        assert_eq!(action.len(), self.action_dim(), "action length");
        self.apply(action_to_phases(action))
    }

    fn apply(&mut self, phases: Vec<f64>) -> StepResult {
        let ev = evaluate(&self.net, &RisState::new(phases.clone(), self.a), &self.plan, self.opts);
        self.phases = phases.clone();
        self.observation = self.observe(&ev.est.gamma);
        StepResult {
            observation: self.observation.clone(),
            reward: ev.sum_se,
            phases,
        }
    }

    fn observe(&self, gamma: &nalgebra::DMatrix<f64>) -> Vec<f64> {
        let mut obs: Vec<f64> = self.phases.iter().map(|p| p / PI - 1.0).collect();
        obs.extend(flatten(gamma).iter().zip(&self.gamma_ref).map(|(g, r)| g / r));
        obs
    }
}

fn flatten(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect()
}
