//! Networks, losses and gradients of the soft actor-critic agent.
//!
//! Each loss takes its reparameterization noise explicitly, so a loss and
//! its gradient can be evaluated repeatedly at the same noise (finite
//! difference checks rely on this). Rewards are divided by the entropy
//! coefficient and the losses then use unit temperature.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::buffer::Batch;
use super::config::{OptimizerKind, SacConfig};
use super::net::{polyak_update, AdamState, DenseNet, ForwardCache, Gradients};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// `ln(1 - tanh(u)^2)`, stable for large `|u|`.
fn ln_one_minus_tanh_sq(u: f64) -> f64 {
    let x = u.abs();
    2.0 * (LN_2 - x - (-2.0 * x).exp().ln_1p())
}

/// Standard normal noise of shape `(dim, cols)`.
pub fn standard_noise<R: Rng + ?Sized>(dim: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(dim, cols, |_, _| rng.sample(StandardNormal))
}

/// Reparameterized policy draw for a batch of states.
#[derive(Debug, Clone)]
pub struct PolicySample {
    pub mean: DMatrix<f64>,
    pub log_std: DMatrix<f64>,
    /// Pre-squash sample `u = mean + std * noise_std * xi`.
    pub pre_squash: DMatrix<f64>,
    /// `tanh(u)`.
    pub action: DMatrix<f64>,
    pub log_prob: DVector<f64>,
    raw_log_std: DMatrix<f64>,
    cache: ForwardCache,
}

/// Draws `a = tanh(mean + std * noise_std * xi)` from the policy head, with
/// the log-density of `a` including the tanh Jacobian.
///
/// `xi` is standard normal with one column per state; the effective noise
/// `epsilon = noise_std * xi` has the configured exploration standard deviation.
pub fn policy_forward(policy: &DenseNet, states: &DMatrix<f64>, xi: &DMatrix<f64>, noise_std: f64) -> PolicySample {
    let (out, cache) = policy.forward_cached(states);
    let n = out.nrows() / 2;
    let b = out.ncols();
    let mean = out.rows(0, n).into_owned();
    let raw_log_std = out.rows(n, n).into_owned();
    let log_std = raw_log_std.map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
    let mut pre_squash = DMatrix::zeros(n, b);
    let mut action = DMatrix::zeros(n, b);
    let mut log_prob = DVector::zeros(b);
    let base = -noise_std.ln() - 0.5 * (2.0 * PI).ln();
    for j in 0..b {
        let mut lp = 0.0;
        for i in 0..n {
            let u = mean[(i, j)] + log_std[(i, j)].exp() * noise_std * xi[(i, j)];
            pre_squash[(i, j)] = u;
            action[(i, j)] = u.tanh();
            lp += -0.5 * xi[(i, j)].powi(2) + base - log_std[(i, j)] - ln_one_minus_tanh_sq(u);
        }
        log_prob[j] = lp;
    }
    PolicySample {
        mean,
        log_std,
        pre_squash,
        action,
        log_prob,
        raw_log_std,
        cache,
    }
}

/// Single-state convenience wrapper returning `(action, log_prob)`.
pub fn policy_sample<R: Rng + ?Sized>(
    policy: &DenseNet,
    state: &[f64],
    noise_std: f64,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let n = policy.output_dim() / 2;
    let xi = standard_noise(n, 1, rng);
    let s = policy_forward(policy, &DMatrix::from_column_slice(state.len(), 1, state), &xi, noise_std);
    (s.action.column(0).iter().copied().collect(), s.log_prob[0])
}

/// Gradient of `sum_j w_j * log_prob_j` with respect to the policy parameters,
/// holding the noise fixed.
pub fn log_prob_grad(policy: &DenseNet, sample: &PolicySample, xi: &DMatrix<f64>, noise_std: f64, w: &DVector<f64>) -> Gradients {
    let zero = DMatrix::zeros(sample.action.nrows(), sample.action.ncols());
    policy_head_backward(policy, sample, xi, noise_std, &zero, w)
}

/// Backpropagates `dL/d(action)` plus `w_j d(log_prob_j)` through the
/// reparameterization into the policy network.
fn policy_head_backward(
    policy: &DenseNet,
    s: &PolicySample,
    xi: &DMatrix<f64>,
    noise_std: f64,
    d_action: &DMatrix<f64>,
    w_logp: &DVector<f64>,
) -> Gradients {
    let (n, b) = s.action.shape();
    let mut d_out = DMatrix::zeros(2 * n, b);
    for j in 0..b {
        for i in 0..n {
            let u = s.pre_squash[(i, j)];
            let t = s.action[(i, j)];
            // d log_prob / du = 2 tanh(u); d log_prob / d log_std = -1 (direct).
            let du = d_action[(i, j)] * (1.0 - t * t) + w_logp[j] * 2.0 * u.tanh();
            let std_eps = s.log_std[(i, j)].exp() * noise_std * xi[(i, j)];
            let dls = du * std_eps - w_logp[j];
            d_out[(i, j)] = du;
            let raw = s.raw_log_std[(i, j)];
            d_out[(n + i, j)] = if raw > LOG_STD_MIN && raw < LOG_STD_MAX { dls } else { 0.0 };
        }
    }
    policy.backward(&s.cache, &d_out).0
}

fn stack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

/// The five networks plus optimizer state.
#[derive(Debug, Clone)]
pub struct SacAgent {
    pub config: SacConfig,
    pub policy: DenseNet,
    pub q1: DenseNet,
    pub q2: DenseNet,
    pub value: DenseNet,
    pub value_target: DenseNet,
    adam: Option<[AdamState; 4]>,
}

/// Losses reported by one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateLosses {
    pub value: f64,
    pub q1: f64,
    pub q2: f64,
    pub policy: f64,
}

impl UpdateLosses {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.q1.is_finite() && self.q2.is_finite() && self.policy.is_finite()
    }
}

impl SacAgent {
    pub fn new<R: Rng + ?Sized>(config: SacConfig, state_dim: usize, action_dim: usize, rng: &mut R) -> SacAgent {
        let h = config.hidden_units;
        let policy = DenseNet::new(&[state_dim, h, h, 2 * action_dim], rng);
        let q1 = DenseNet::new(&[state_dim + action_dim, h, h, 1], rng);
        let q2 = DenseNet::new(&[state_dim + action_dim, h, h, 1], rng);
        let value = DenseNet::new(&[state_dim, h, h, 1], rng);
        SacAgent::from_networks(config, policy, q1, q2, value.clone(), value)
    }

    pub fn from_networks(
        config: SacConfig,
        policy: DenseNet,
        q1: DenseNet,
        q2: DenseNet,
        value: DenseNet,
        value_target: DenseNet,
    ) -> SacAgent {
        let adam = (config.optimizer == OptimizerKind::Adam).then(|| {
            [
                AdamState::new(value.num_params()),
                AdamState::new(q1.num_params()),
                AdamState::new(q2.num_params()),
                AdamState::new(policy.num_params()),
            ]
        });
        SacAgent {
            config,
            policy,
            q1,
            q2,
            value,
            value_target,
            adam,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.value.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.policy.output_dim() / 2
    }

    pub fn networks_finite(&self) -> bool {
        [&self.policy, &self.q1, &self.q2, &self.value, &self.value_target]
            .iter()
            .all(|n| n.is_finite())
    }

    /// Stochastic action for one state.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Vec<f64> {
        policy_sample(&self.policy, state, self.config.exploration_noise, rng).0
    }

    /// `tanh(mean)` for one state.
    pub fn act_deterministic(&self, state: &[f64]) -> Vec<f64> {
        let out = self.policy.forward(&DMatrix::from_column_slice(state.len(), 1, state));
        (0..self.action_dim()).map(|i| out[(i, 0)].tanh()).collect()
    }

    fn min_q(&self, states: &DMatrix<f64>, actions: &DMatrix<f64>) -> DVector<f64> {
        let x = stack(states, actions);
        let a = self.q1.forward(&x);
        let b = self.q2.forward(&x);
        DVector::from_fn(x.ncols(), |j, _| a[(0, j)].min(b[(0, j)]))
    }

    /// `mean_j 1/2 (V(s_j) - (min_i Q_i(s_j, a~_j) - log pi(a~_j|s_j)))^2` with
    /// `a~` drawn from the current policy; gradient with respect to V.
    pub fn value_loss(&self, batch: &Batch, xi: &DMatrix<f64>) -> (f64, Gradients) {
        let s = policy_forward(&self.policy, &batch.states, xi, self.config.exploration_noise);
        let target = self.min_q(&batch.states, &s.action) - &s.log_prob;
        let (v, cache) = self.value.forward_cached(&batch.states);
        let b = batch.len() as f64;
        let diff = DMatrix::from_fn(1, batch.len(), |_, j| v[(0, j)] - target[j]);
        let loss = 0.5 * diff.norm_squared() / b;
        let (g, _) = self.value.backward(&cache, &(diff / b));
        (loss, g)
    }

    /// Regression target `r / entropy_coeff + discount * V_target(s')`.
    pub fn q_target(&self, batch: &Batch) -> DVector<f64> {
        let v_next = self.value_target.forward(&batch.next_states);
        DVector::from_fn(batch.len(), |j, _| {
            batch.rewards[j] / self.config.entropy_coeff + self.config.discount * v_next[(0, j)]
        })
    }

    /// Both Q losses toward the shared target, with their gradients.
    pub fn q_loss(&self, batch: &Batch) -> ([f64; 2], [Gradients; 2]) {
        let y = self.q_target(batch);
        let x = stack(&batch.states, &batch.actions);
        let b = batch.len() as f64;
        let one = |net: &DenseNet| {
            let (q, cache) = net.forward_cached(&x);
            let diff = DMatrix::from_fn(1, batch.len(), |_, j| q[(0, j)] - y[j]);
            let loss = 0.5 * diff.norm_squared() / b;
            (loss, net.backward(&cache, &(diff / b)).0)
        };
        let (l1, g1) = one(&self.q1);
        let (l2, g2) = one(&self.q2);
        ([l1, l2], [g1, g2])
    }

    /// `mean_j (log pi(a~_j|s_j) - min_i Q_i(s_j, a~_j))` with the gradient
    /// flowing through both the log-density and the Q action input.
    pub fn policy_loss(&self, batch: &Batch, xi: &DMatrix<f64>) -> (f64, Gradients) {
        let noise = self.config.exploration_noise;
        let s = policy_forward(&self.policy, &batch.states, xi, noise);
        let x = stack(&batch.states, &s.action);
        let (qa, ca) = self.q1.forward_cached(&x);
        let (qb, cb) = self.q2.forward_cached(&x);
        let nb = batch.len();
        let b = nb as f64;
        let mut loss = 0.0;
        let mut da = DMatrix::zeros(1, nb);
        let mut db = DMatrix::zeros(1, nb);
        for j in 0..nb {
            if qa[(0, j)] <= qb[(0, j)] {
                loss += s.log_prob[j] - qa[(0, j)];
                da[(0, j)] = -1.0 / b;
            } else {
                loss += s.log_prob[j] - qb[(0, j)];
                db[(0, j)] = -1.0 / b;
            }
        }
        let sd = self.state_dim();
        let gx = self.q1.backward(&ca, &da).1 + self.q2.backward(&cb, &db).1;
        let d_action = gx.rows(sd, self.action_dim()).into_owned();
        let w = DVector::from_element(nb, 1.0 / b);
        let g = policy_head_backward(&self.policy, &s, xi, noise, &d_action, &w);
        (loss / b, g)
    }

    fn apply(&mut self, which: usize, grad: &Gradients) {
        let lr = self.config.lr;
        let net = match which {
            0 => &mut self.value,
            1 => &mut self.q1,
            2 => &mut self.q2,
            _ => &mut self.policy,
        };
        match &mut self.adam {
            Some(states) => states[which].step(net, grad, lr),
            None => net.sgd_step(grad, lr),
        }
    }

    /// One gradient step on V, both Q networks and the policy, followed by
    /// the target update.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> UpdateLosses {
        let n = self.action_dim();
        let xi_v = standard_noise(n, batch.len(), rng);
        let (lv, gv) = self.value_loss(batch, &xi_v);
        self.apply(0, &gv);
        let ([l1, l2], [g1, g2]) = self.q_loss(batch);
        self.apply(1, &g1);
        self.apply(2, &g2);
        let xi_p = standard_noise(n, batch.len(), rng);
        let (lp, gp) = self.policy_loss(batch, &xi_p);
        self.apply(3, &gp);
        polyak_update(&mut self.value_target, &self.value, self.config.polyak);
        UpdateLosses {
            value: lv,
            q1: l1,
            q2: l2,
            policy: lp,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    const H: f64 = 1e-5;
    const TOL: f64 = 1e-4;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        num / den
    }

    fn fd_grad(net: &DenseNet, loss: impl Fn(&DenseNet) -> f64) -> Vec<f64> {
        let p = net.params();
        (0..p.len())
            .map(|i| {
                let mut q = p.clone();
                q[i] += H;
                let mut up = net.clone();
                up.set_params(&q);
                q[i] -= 2.0 * H;
                let mut dn = net.clone();
                dn.set_params(&q);
                (loss(&up) - loss(&dn)) / (2.0 * H)
            })
            .collect()
    }

    fn small_agent(seed: u64) -> (SacAgent, Batch) {
        let mut rng = substream(seed, 0);
        let cfg = SacConfig {
            hidden_units: 8,
            ..SacConfig::default()
        };
        let (sd, ad, nb) = (3, 2, 5);
        let agent = SacAgent::new(cfg, sd, ad, &mut rng);
        let batch = Batch {
            states: DMatrix::from_fn(sd, nb, |_, _| rng.random_range(-1.0..1.0)),
            actions: DMatrix::from_fn(ad, nb, |_, _| rng.random_range(-0.9..0.9)),
            rewards: DVector::from_fn(nb, |_, _| rng.random_range(0.0..2.0)),
            next_states: DMatrix::from_fn(sd, nb, |_, _| rng.random_range(-1.0..1.0)),
        };
        (agent, batch)
    }

    #[test]
    fn value_gradient_matches_finite_differences() {
        for seed in 0..3 {
            let (agent, batch) = small_agent(seed);
            let xi = standard_noise(2, batch.len(), &mut substream(seed, 1));
            let (_, g) = agent.value_loss(&batch, &xi);
            let fd = fd_grad(&agent.value, |v| {
                let mut a = agent.clone();
                a.value = v.clone();
                a.value_loss(&batch, &xi).0
            });
            let e = rel_err(&g.flatten(), &fd);
            assert!(e < TOL, "seed {seed}: {e}");
        }
    }

    #[test]
    fn q_gradients_match_finite_differences() {
        for seed in 0..3 {
            let (agent, batch) = small_agent(seed);
            let (_, [g1, g2]) = agent.q_loss(&batch);
            let fd1 = fd_grad(&agent.q1, |q| {
                let mut a = agent.clone();
                a.q1 = q.clone();
                a.q_loss(&batch).0[0]
            });
            let fd2 = fd_grad(&agent.q2, |q| {
                let mut a = agent.clone();
                a.q2 = q.clone();
                a.q_loss(&batch).0[1]
            });
            assert!(rel_err(&g1.flatten(), &fd1) < TOL);
            assert!(rel_err(&g2.flatten(), &fd2) < TOL);
        }
    }

    #[test]
    fn policy_gradient_matches_finite_differences() {
        for seed in 0..3 {
            let (agent, batch) = small_agent(seed);
            let xi = standard_noise(2, batch.len(), &mut substream(seed, 2));
            let (_, g) = agent.policy_loss(&batch, &xi);
            let fd = fd_grad(&agent.policy, |p| {
                let mut a = agent.clone();
                a.policy = p.clone();
                a.policy_loss(&batch, &xi).0
            });
            let e = rel_err(&g.flatten(), &fd);
            assert!(e < TOL, "seed {seed}: {e}");
        }
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let (agent, batch) = small_agent(7);
        let xi = standard_noise(2, batch.len(), &mut substream(7, 3));
        let noise = agent.config.exploration_noise;
        let w = DVector::from_fn(batch.len(), |j, _| 1.0 + j as f64);
        let s = policy_forward(&agent.policy, &batch.states, &xi, noise);
        let g = log_prob_grad(&agent.policy, &s, &xi, noise, &w);
        let fd = fd_grad(&agent.policy, |p| policy_forward(p, &batch.states, &xi, noise).log_prob.dot(&w));
        assert!(rel_err(&g.flatten(), &fd) < TOL);
    }

    #[test]
    fn log_prob_is_gaussian_density_of_tanh_sample() {
        // One dimension: density of a = tanh(u), u ~ N(mu, (std * noise)^2).
        let (agent, batch) = small_agent(1);
        let noise = 0.1;
        let xi = DMatrix::from_element(2, batch.len(), 0.7);
        let s = policy_forward(&agent.policy, &batch.states, &xi, noise);
        let mut expected = 0.0;
        for i in 0..2 {
            let sd = s.log_std[(i, 0)].exp() * noise;
            let u = s.pre_squash[(i, 0)];
            let z = (u - s.mean[(i, 0)]) / sd;
            expected += -0.5 * z * z - sd.ln() - 0.5 * (2.0 * PI).ln() - (1.0 - u.tanh().powi(2)).ln();
        }
        assert!((s.log_prob[0] - expected).abs() < 1e-10);
    }

    #[test]
    fn vanishing_std_gives_tanh_mean() {
        let mut rng = substream(9, 0);
        let mut policy = DenseNet::new(&[2, 4, 2], &mut rng);
        // Drive the log-std head to its floor.
        let mut layers = policy.layers().to_vec();
        layers[1].w.row_mut(1).fill(0.0);
        layers[1].b[1] = -50.0;
        policy = DenseNet::from_layers(layers).unwrap();
        let state = [0.3, -0.4];
        let (a, lp) = policy_sample(&policy, &state, 0.1, &mut rng);
        let mean = policy.forward(&DMatrix::from_column_slice(2, 1, &state))[(0, 0)];
        assert!((a[0] - mean.tanh()).abs() < 1e-8);
        assert!(lp.is_finite());
    }

    #[test]
    fn log_prob_stays_finite_when_saturated() {
        let mut rng = substream(10, 0);
        let mut policy = DenseNet::new(&[1, 2], &mut rng);
        let mut layers = policy.layers().to_vec();
        layers[0].w.fill(0.0);
        layers[0].b[0] = 40.0;
        policy = DenseNet::from_layers(layers).unwrap();
        let (a, lp) = policy_sample(&policy, &[0.0], 0.1, &mut rng);
        assert_eq!(a[0], 1.0);
        assert!(lp.is_finite());
    }

    #[test]
    fn value_loss_vanishes_at_soft_target() {
        let (mut agent, batch) = small_agent(4);
        let xi = standard_noise(2, batch.len(), &mut substream(4, 5));
        // Make V a constant equal to the target of a single-sample batch.
        let one = Batch {
            states: batch.states.columns(0, 1).into_owned(),
            actions: batch.actions.columns(0, 1).into_owned(),
            rewards: batch.rewards.rows(0, 1).into_owned(),
            next_states: batch.next_states.columns(0, 1).into_owned(),
        };
        let xi1 = xi.columns(0, 1).into_owned();
        let s = policy_forward(&agent.policy, &one.states, &xi1, 0.1);
        let target = agent.min_q(&one.states, &s.action)[0] - s.log_prob[0];
        let mut layers = agent.value.layers().to_vec();
        let last = layers.len() - 1;
        layers[last].w.fill(0.0);
        layers[last].b[0] = target;
        agent.value = DenseNet::from_layers(layers).unwrap();
        let (loss, g) = agent.value_loss(&one, &xi1);
        assert!(loss.abs() < 1e-20);
        assert!(g.flatten().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn q_loss_vanishes_when_q_equals_reward() {
        let (mut agent, mut batch) = small_agent(5);
        agent.config.discount = 1e-300;
        batch.rewards.fill(0.6);
        let mut layers = agent.q1.layers().to_vec();
        let last = layers.len() - 1;
        layers[last].w.fill(0.0);
        layers[last].b[0] = 0.6 / agent.config.entropy_coeff;
        agent.q1 = DenseNet::from_layers(layers).unwrap();
        let ([l1, _], _) = agent.q_loss(&batch);
        assert!(l1 < 1e-20);
    }

    #[test]
    fn constant_q_pushes_std_up() {
        let (mut agent, batch) = small_agent(6);
        for q in [&mut agent.q1, &mut agent.q2] {
            let mut layers = q.layers().to_vec();
            let last = layers.len() - 1;
            layers[last].w.fill(0.0);
            layers[last].b[0] = 3.0;
            *q = DenseNet::from_layers(layers).unwrap();
        }
        let xi = standard_noise(2, batch.len(), &mut substream(6, 1));
        let (loss, g) = agent.policy_loss(&batch, &xi);
        let s = policy_forward(&agent.policy, &batch.states, &xi, 0.1);
        assert!((loss - (s.log_prob.mean() - 3.0)).abs() < 1e-12);
        // A small step along -grad raises the mean log-std.
        let mut stepped = agent.policy.clone();
        stepped.sgd_step(&g, 1e-3);
        let after = policy_forward(&stepped, &batch.states, &xi, 0.1);
        assert!(after.log_std.mean() > s.log_std.mean());
    }
}
