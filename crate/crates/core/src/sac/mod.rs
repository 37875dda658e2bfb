//! Soft actor-critic search over RIS phase vectors.
//!
//! The agent observes the current phases and the per-link estimate
//! variances, outputs a squashed action in `[-1, 1]^N` that is mapped to new
//! phases, and is rewarded with the closed-form sum SE of those phases.
//! Networks are small ReLU MLPs with hand-written gradients.

mod agent;
mod buffer;
mod checkpoint;
mod config;
mod env;
mod net;
mod train;

pub use agent::{
    log_prob_grad, policy_forward, policy_sample, standard_noise, PolicySample, SacAgent, UpdateLosses, LOG_STD_MAX,
    LOG_STD_MIN,
};
pub use buffer::{Batch, ReplayBuffer, Transition};
pub use checkpoint::{Checkpoint, LayerDump, NetworkDump, NetworkSet, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{OptimizerKind, SacConfig};
pub use env::{action_to_phases, RisEnv, StepResult};
pub use net::{polyak_update, AdamState, Dense, DenseNet, ForwardCache, Gradients};
pub use train::{train, train_with_progress, write_learning_curve, TrainOutcome};
