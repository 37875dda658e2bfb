use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter update rule shared by the value, Q and policy networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

/// Soft actor-critic hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub lr: f64,
    pub discount: f64,
    pub polyak: f64,
    /// Temperature; rewards are divided by it and the loss uses unit temperature.
    pub entropy_coeff: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    pub hidden_units: usize,
    /// Standard deviation of the reparameterization noise.
    pub exploration_noise: f64,
    pub episode_len: usize,
    pub episodes: usize,
    pub optimizer: OptimizerKind,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig {
            lr: 1e-3,
            discount: 0.99,
            polyak: 0.005,
            entropy_coeff: 0.2,
            batch: 64,
            buffer_capacity: 32_000,
            hidden_units: 64,
            exploration_noise: 0.1,
            episode_len: 400,
            episodes: 2000,
            optimizer: OptimizerKind::Sgd,
        }
    }
}

impl SacConfig {
    /// Checks positivity and the ranges of `polyak` and `discount`.
    ///
    /// `episodes = 0` is allowed and means a baseline-only run.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("sac.{what}")));
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad("discount must lie in (0, 1]");
        }
        if !(self.polyak > 0.0 && self.polyak <= 1.0) {
            return bad("polyak must lie in (0, 1]");
        }
        if !(self.entropy_coeff.is_finite() && self.entropy_coeff > 0.0) {
            return bad("entropy_coeff must be positive");
        }
        if !(self.exploration_noise.is_finite() && self.exploration_noise > 0.0) {
            return bad("exploration_noise must be positive");
        }
        if self.batch == 0 || self.buffer_capacity == 0 || self.hidden_units == 0 || self.episode_len == 0 {
            return bad("batch, buffer_capacity, hidden_units and episode_len must be positive");
        }
        if self.batch > self.buffer_capacity {
            return bad("batch exceeds buffer_capacity");
        }
        Ok(())
    }

    /// Reads the `[sac]` table of a TOML document, if present.
    pub fn from_toml_str(text: &str) -> Result<SacConfig> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let cfg = match table.get("sac") {
            Some(v) => v.clone().try_into().map_err(|e| Error::Config(format!("[sac]: {e}")))?,
            None => SacConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SacConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let mut c = SacConfig::default();
        c.polyak = 1.5;
        assert!(c.validate().is_err());
        let mut c = SacConfig::default();
        c.discount = 0.0;
        assert!(c.validate().is_err());
        let mut c = SacConfig::default();
        c.batch = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_section() {
        let c = SacConfig::from_toml_str("M = 3\n[sac]\nepisodes = 7\noptimizer = \"adam\"\n").unwrap();
        assert_eq!(c.episodes, 7);
        assert_eq!(c.optimizer, OptimizerKind::Adam);
        assert_eq!(c.batch, 64);
        assert!(SacConfig::from_toml_str("[sac]\nbogus = 1\n").is_err());
    }
}
