//! Versioned JSON dump of a trained agent.
//!
//! Layout: `{format, version, config, state_dim, action_dim, amplitude_gain,
//! best_phases, best_sum_se, networks: {policy, q1, q2, value, value_target}}`.
//! Each network is a list of layers `{rows, cols, weights, bias}` with
//! `weights` row-major (`rows` outputs by `cols` inputs).

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::agent::SacAgent;
use super::config::SacConfig;
use super::net::{Dense, DenseNet};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "ris-cellfree-sac";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDump {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDump {
    pub layers: Vec<LayerDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSet {
    pub policy: NetworkDump,
    pub q1: NetworkDump,
    pub q2: NetworkDump,
    pub value: NetworkDump,
    pub value_target: NetworkDump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: SacConfig,
    pub state_dim: usize,
    pub action_dim: usize,
    pub amplitude_gain: f64,
    pub best_phases: Vec<f64>,
    pub best_sum_se: f64,
    pub networks: NetworkSet,
}

impl NetworkDump {
    pub fn from_net(net: &DenseNet) -> NetworkDump {
        let layers = net
            .layers()
            .iter()
            .map(|l| LayerDump {
                rows: l.w.nrows(),
                cols: l.w.ncols(),
                weights: l.w.transpose().as_slice().to_vec(),
                bias: l.b.as_slice().to_vec(),
            })
            .collect();
        NetworkDump { layers }
    }

    pub fn to_net(&self) -> Result<DenseNet> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.rows * l.cols || l.bias.len() != l.rows {
                return Err(Error::Checkpoint(format!("layer {i}: size mismatch")));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::Checkpoint(format!("layer {i}: non-finite parameter")));
            }
            layers.push(Dense {
                w: DMatrix::from_row_slice(l.rows, l.cols, &l.weights),
                b: DVector::from_column_slice(&l.bias),
            });
        }
        DenseNet::from_layers(layers)
    }
}

impl Checkpoint {
    pub fn new(agent: &SacAgent, amplitude_gain: f64, best_phases: Vec<f64>, best_sum_se: f64) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: agent.config.clone(),
            state_dim: agent.state_dim(),
            action_dim: agent.action_dim(),
            amplitude_gain,
            best_phases,
            best_sum_se,
            networks: NetworkSet {
                policy: NetworkDump::from_net(&agent.policy),
                q1: NetworkDump::from_net(&agent.q1),
                q2: NetworkDump::from_net(&agent.q2),
                value: NetworkDump::from_net(&agent.value),
                value_target: NetworkDump::from_net(&agent.value_target),
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Checkpoint> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("{e}")))?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format {:?}", c.format)));
        }
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", c.version)));
        }
        if c.best_phases.len() != c.action_dim {
            return Err(Error::Checkpoint("best_phases length differs from action_dim".into()));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Checkpoint::from_json(&text)
    }

    pub fn to_agent(&self) -> Result<SacAgent> {
        let n = &self.networks;
        let agent = SacAgent::from_networks(
            self.config.clone(),
            n.policy.to_net()?,
            n.q1.to_net()?,
            n.q2.to_net()?,
            n.value.to_net()?,
            n.value_target.to_net()?,
        );
        if agent.state_dim() != self.state_dim || agent.action_dim() != self.action_dim {
            return Err(Error::Checkpoint("network shapes differ from declared dimensions".into()));
        }
        Ok(agent)
    }
}
