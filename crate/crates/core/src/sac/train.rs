use std::io::Write;

use super::agent::{SacAgent, UpdateLosses};
use super::buffer::{ReplayBuffer, Transition};
use super::config::SacConfig;
use super::env::RisEnv;
use crate::error::{Error, Result};
use crate::rng::substream;

const INIT_STREAM: u64 = 0;
const ACT_STREAM: u64 = 1;
const LEARN_STREAM: u64 = 2;

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Sum over each episode of the per-step sum SE (unscaled).
    pub curve: Vec<f64>,
    /// Highest-reward phase vector visited, if any step ran.
    pub best_phases: Option<Vec<f64>>,
    pub best_sum_se: f64,
    /// Sum SE of equal phases on the same environment.
    pub baseline_sum_se: f64,
    pub agent: SacAgent,
    pub last_losses: Option<UpdateLosses>,
}

impl TrainOutcome {
    /// Mean of the first and last `ceil(len / 10)` episodes.
    pub fn decile_means(&self) -> Option<(f64, f64)> {
        let n = self.curve.len();
        if n == 0 {
            return None;
        }
        let d = n.div_ceil(10);
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        Some((mean(&self.curve[..d]), mean(&self.curve[n - d..])))
    }
}

pub fn train(env: &mut RisEnv, config: &SacConfig, seed: u64) -> Result<TrainOutcome> {
    train_with_progress(env, config, seed, |_, _| {})
}

/// As [`train`], calling `progress(episode, cumulative_reward)` after each episode.
pub fn train_with_progress(
    env: &mut RisEnv,
    config: &SacConfig,
    seed: u64,
    mut progress: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut init_rng = substream(seed, INIT_STREAM);
    let mut act_rng = substream(seed, ACT_STREAM);
    let mut learn_rng = substream(seed, LEARN_STREAM);
    let mut agent = SacAgent::new(config.clone(), env.observation_dim(), env.action_dim(), &mut init_rng);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let baseline_sum_se = env.sum_se(&vec![0.0; env.action_dim()]);
    let mut curve = Vec::with_capacity(config.episodes);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut last_losses = None;

    for episode in 0..config.episodes {
        let mut state = env.reset(&mut act_rng);
        let mut total = 0.0;
        for step in 0..config.episode_len {
            let action = agent.act(&state, &mut act_rng);
            let out = env.step(&action);
            total += out.reward;
            if best.as_ref().is_none_or(|(_, r)| out.reward > *r) {
                best = Some((out.phases.clone(), out.reward));
            }
            buffer.push(Transition {
                state,
                action,
                reward: out.reward,
                next_state: out.observation.clone(),
            });
            state = out.observation;
            if buffer.len() >= config.batch {
                let batch = buffer.sample(config.batch, &mut learn_rng);
                let losses = agent.update(&batch, &mut learn_rng);
                if !losses.is_finite() || !agent.networks_finite() {
                    return Err(divergence(episode, step, &losses, &agent));
                }
                last_losses = Some(losses);
            }
        }
        curve.push(total);
        progress(episode, total);
    }

    let (best_phases, best_sum_se) = match best {
        Some((p, r)) => (Some(p), r),
        None => (None, f64::NAN),
    };
    Ok(TrainOutcome {
        curve,
        best_phases,
        best_sum_se,
        baseline_sum_se,
        agent,
        last_losses,
    })
}

fn divergence(episode: usize, step: usize, l: &UpdateLosses, agent: &SacAgent) -> Error {
    Error::Divergence {
        episode,
        step,
        reason: format!(
            "losses value={:e} q1={:e} q2={:e} policy={:e}; max |param| policy={:e} q1={:e} q2={:e} value={:e}",
            l.value,
            l.q1,
            l.q2,
            l.policy,
            agent.policy.max_abs_param(),
            agent.q1.max_abs_param(),
            agent.q2.max_abs_param(),
            agent.value.max_abs_param(),
        ),
    }
}

/// CSV with columns `episode,cumulative_reward`.
pub fn write_learning_curve<W: Write>(curve: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["episode", "cumulative_reward"])?;
    for (i, r) in curve.iter().enumerate() {
        w.write_record([i.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
