//! Static system parameters, network geometry and spatial correlation.

mod config;
mod layout;

pub use config::{dbm_to_watts, resolve_key, watts_to_dbm};
pub use layout::{
    build_correlation_matrix, element_positions, large_scale_gain, sample_layout, NetworkRealization,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How element index `x` maps to a position on the RIS grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PositionIndexing {
    /// `u_x = [0, mod(x-1, N_H) d_H, floor((x-1) / N_V) d_V]`, as printed.
    #[default]
    Verbatim,
    /// Row-major enumeration, dividing by `N_H` instead of `N_V`.
    RowMajor,
}

/// Orthonormal basis the pilot sequences are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PilotBasis {
    #[default]
    Canonical,
    Dft,
}

/// All static parameters. Powers are in watts, lengths in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub num_aps: usize,
    pub num_users: usize,
    pub n_h: usize,
    pub n_v: usize,
    pub d_h: f64,
    pub d_v: f64,
    pub wavelength: f64,
    pub radius: f64,
    /// Pilot transmit power `rho`.
    pub pilot_power: f64,
    /// Uplink data power `rho_u`.
    pub data_power: f64,
    pub tau_p: usize,
    pub tau_c: usize,
    /// AP receiver noise `sigma^2`.
    pub ap_noise: f64,
    /// Per-element active RIS noise `sigma_bar^2`.
    pub ris_noise: f64,
    pub beta_exp: f64,
    pub alpha1_exp: f64,
    pub alpha2_exp: f64,
    pub ris_power_budget: f64,
    /// Per-element circuit power `P_c`.
    pub circuit_power: f64,
    /// Per-element DC bias power `P_DC`.
    pub dc_power: f64,
    /// Amplifier efficiency `xi`.
    pub amp_efficiency: f64,
    pub a_max: f64,
    /// User power amplifier efficiency `zeta`.
    pub pa_efficiency: f64,
    pub backhaul_fixed_power: f64,
    /// Traffic-dependent backhaul power in W per bit/s.
    pub backhaul_traffic_power: f64,
    pub bandwidth: f64,
    pub position_indexing: PositionIndexing,
    pub pilot_basis: PilotBasis,
}

impl Default for Scenario {
    fn default() -> Self {
        let wavelength = SPEED_OF_LIGHT / 1.9e9;
        Scenario {
            num_aps: 20,
            num_users: 15,
            n_h: 8,
            n_v: 8,
            d_h: wavelength / 4.0,
            d_v: wavelength / 4.0,
            wavelength,
            radius: 500.0,
            pilot_power: 0.1,
            data_power: 0.1,
            tau_p: 15,
            tau_c: 200,
            ap_noise: dbm_to_watts(-80.0),
            ris_noise: dbm_to_watts(-80.0),
            beta_exp: 4.0,
            alpha1_exp: 2.5,
            alpha2_exp: 2.5,
            ris_power_budget: dbm_to_watts(30.0),
            circuit_power: dbm_to_watts(-10.0),
            dc_power: dbm_to_watts(-5.0),
            amp_efficiency: 0.8,
            a_max: 10.0,
            pa_efficiency: 0.4,
            backhaul_fixed_power: 0.825,
            backhaul_traffic_power: 0.25e-9,
            bandwidth: 20e6,
            position_indexing: PositionIndexing::Verbatim,
            pilot_basis: PilotBasis::Canonical,
        }
    }
}

impl Scenario {
    /// Number of RIS elements `N = N_H * N_V`.
    pub fn num_elements(&self) -> usize {
        self.n_h * self.n_v
    }

    /// Element area `d_H * d_V`.
    pub fn element_area(&self) -> f64 {
        self.d_h * self.d_v
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidScenario(msg.to_string()));
        if self.num_aps == 0 || self.num_users == 0 || self.num_elements() == 0 {
            return bad("M, K and N must all be at least 1");
        }
        if self.tau_p == 0 || self.tau_p > self.tau_c {
            return bad("pilot length must satisfy 1 <= tau_p <= tau_c");
        }
        let positive = [
            ("d_h", self.d_h),
            ("d_v", self.d_v),
            ("wavelength", self.wavelength),
            ("radius", self.radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidScenario(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("pilot_power", self.pilot_power),
            ("data_power", self.data_power),
            ("ap_noise", self.ap_noise),
            ("ris_noise", self.ris_noise),
            ("ris_power_budget", self.ris_power_budget),
            ("circuit_power", self.circuit_power),
            ("dc_power", self.dc_power),
            ("backhaul_fixed_power", self.backhaul_fixed_power),
            ("backhaul_traffic_power", self.backhaul_traffic_power),
            ("bandwidth", self.bandwidth),
            ("beta_exp", self.beta_exp),
            ("alpha1_exp", self.alpha1_exp),
            ("alpha2_exp", self.alpha2_exp),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidScenario(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.amp_efficiency > 0.0 && self.amp_efficiency <= 1.0) {
            return bad("amp_efficiency must lie in (0, 1]");
        }
        if !(self.pa_efficiency > 0.0 && self.pa_efficiency <= 1.0) {
            return bad("pa_efficiency must lie in (0, 1]");
        }
        if !(self.a_max.is_finite() && self.a_max >= 1.0) {
            return bad("a_max must be at least 1");
        }
        Ok(())
    }

    /// Hex SHA-256 digest of the fully resolved parameter set.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(digest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let s = Scenario::default();
        s.validate().unwrap();
        assert_eq!(s.num_elements(), 64);
    }

    #[test]
    fn rejects_bad_values() {
        let mut s = Scenario::default();
        s.tau_p = 300;
        assert!(s.validate().is_err());
        let mut s = Scenario::default();
        s.amp_efficiency = 0.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::default();
        s.a_max = 0.5;
        assert!(s.validate().is_err());
        let mut s = Scenario::default();
        s.ap_noise = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = Scenario::default();
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.num_users += 1;
        assert_ne!(a.config_hash(), b.config_hash());
    }
}
