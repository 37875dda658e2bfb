//! Flat key-value configuration loading.
//!
//! Keys are the `Scenario` field names or the usual symbols (`M`, `rho`,
//! `sigma2_bar`, ...). A `_dbm` suffix marks a power given in dBm. A few
//! derived keys are accepted: `carrier_frequency` (Hz), `a_max_db`,
//! `num_elements` (square grid when possible, else `N x 1`) and
//! `element_size` (sets `d_h = d_v`).

use std::path::Path;

use serde_json::{Map, Value};

use super::{Scenario, SPEED_OF_LIGHT};
use crate::{Error, Result};

const ALIASES: &[(&str, &str)] = &[
    ("M", "num_aps"),
    ("K", "num_users"),
    ("N_H", "n_h"),
    ("N_V", "n_v"),
    ("d_H", "d_h"),
    ("d_V", "d_v"),
    ("lambda", "wavelength"),
    ("rho", "pilot_power"),
    ("rho_u", "data_power"),
    ("sigma2", "ap_noise"),
    ("sigma2_bar", "ris_noise"),
    ("P_aris", "ris_power_budget"),
    ("P_c", "circuit_power"),
    ("P_dc", "dc_power"),
    ("xi", "amp_efficiency"),
    ("zeta", "pa_efficiency"),
    ("P0", "backhaul_fixed_power"),
    ("Pbt", "backhaul_traffic_power"),
    ("B", "bandwidth"),
];

/// Tables that may appear in a config file but are not scenario fields.
const FOREIGN_TABLES: &[&str] = &["sac"];

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Canonical field name and SI value for a config key.
pub fn resolve_key(key: &str, value: f64) -> (String, f64) {
    if let Some(stem) = key.strip_suffix("_dbm") {
        let (name, _) = resolve_key(stem, 0.0);
        return (name, dbm_to_watts(value));
    }
    let name = ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map(|(_, canonical)| *canonical)
        .unwrap_or(key);
    (name.to_string(), value)
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Scenario::from_toml_table(&table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Scenario::from_toml_str(&text)
    }

    /// Defaults overridden by every top-level key of `table`.
    pub fn from_toml_table(table: &toml::Table) -> Result<Scenario> {
        let mut scenario = Scenario::default();
        for (key, value) in table {
            match value {
                toml::Value::Integer(i) => scenario.set_param(key, *i as f64)?,
                toml::Value::Float(f) => scenario.set_param(key, *f)?,
                toml::Value::String(s) => scenario.set_choice(key, s)?,
                toml::Value::Table(_) if FOREIGN_TABLES.contains(&key.as_str()) => {}
                other => {
                    return Err(Error::Config(format!(
                        "key `{key}`: unsupported value type {}",
                        other.type_str()
                    )))
                }
            }
        }
        scenario.validate()?;
        Ok(scenario)
    }

    /// Sets one numeric parameter by config key. Does not re-validate.
    pub fn set_param(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Config(format!("key `{key}`: value must be finite")));
        }
        match key {
            "carrier_frequency" => {
                if value <= 0.0 {
                    return Err(Error::Config("carrier_frequency must be positive".into()));
                }
                self.wavelength = SPEED_OF_LIGHT / value;
                return Ok(());
            }
            "a_max_db" => {
                self.a_max = 10f64.powf(value / 20.0);
                return Ok(());
            }
            "num_elements" => {
                let n = as_count(key, value)?;
                let (n_h, n_v) = grid_for(n);
                self.n_h = n_h;
                self.n_v = n_v;
                return Ok(());
            }
            "element_size" => {
                self.d_h = value;
                self.d_v = value;
                return Ok(());
            }
            _ => {}
        }
        let (name, value) = resolve_key(key, value);
        let mut map = self.as_map();
        let slot = map
            .get_mut(&name)
            .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        *slot = match slot {
            Value::Number(n) if n.is_u64() => Value::from(as_count(key, value)? as u64),
            Value::Number(_) => Value::from(value),
            _ => return Err(Error::Config(format!("key `{key}` is not numeric"))),
        };
        *self = from_map(map)?;
        Ok(())
    }

    /// Sets one enumerated option (`position_indexing`, `pilot_basis`).
    pub fn set_choice(&mut self, key: &str, value: &str) -> Result<()> {
        let mut map = self.as_map();
        match map.get_mut(key) {
            Some(slot @ Value::String(_)) => *slot = Value::from(value),
            Some(_) => return Err(Error::Config(format!("key `{key}` expects a number"))),
            None => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        *self = from_map(map)?;
        Ok(())
    }

    fn as_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self).expect("scenario serializes") {
            Value::Object(map) => map,
            _ => unreachable!("scenario serializes to an object"),
        }
    }
}

fn from_map(map: Map<String, Value>) -> Result<Scenario> {
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))
}

fn as_count(key: &str, value: f64) -> Result<usize> {
    if value < 0.0 || value.fract() != 0.0 {
        return Err(Error::Config(format!("key `{key}` expects a non-negative integer, got {value}")));
    }
    Ok(value as usize)
}

fn grid_for(n: usize) -> (usize, usize) {
    let side = (n as f64).sqrt().round() as usize;
    if side * side == n {
        (side, side)
    } else {
        (n, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dbm_conversion() {
        assert_relative_eq!(dbm_to_watts(30.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(dbm_to_watts(-80.0), 1e-11, max_relative = 1e-12);
        assert_relative_eq!(watts_to_dbm(dbm_to_watts(-5.0)), -5.0, max_relative = 1e-12);
    }

    #[test]
    fn loads_flat_keys_with_units() {
        let s = Scenario::from_toml_str(
            r#"
            M = 4
            num_users = 3
            num_elements = 16
            carrier_frequency = 1.9e9
            sigma2_bar_dbm = -70
            a_max_db = 20
            position_indexing = "row_major"
            [sac]
            episodes = 3
            "#,
        )
        .unwrap();
        assert_eq!(s.num_aps, 4);
        assert_eq!(s.num_users, 3);
        assert_eq!((s.n_h, s.n_v), (4, 4));
        assert_relative_eq!(s.ris_noise, 1e-10, max_relative = 1e-12);
        assert_relative_eq!(s.a_max, 10.0, max_relative = 1e-12);
        assert_eq!(s.position_indexing, super::super::PositionIndexing::RowMajor);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(Scenario::from_toml_str("bogus = 1").is_err());
        assert!(Scenario::from_toml_str("num_aps = 1.5").is_err());
        assert!(Scenario::from_toml_str("num_aps = [1").is_err());
        assert!(Scenario::from_toml_str("position_indexing = \"diagonal\"").is_err());
        assert!(Scenario::from_toml_str("tau_p = 500").is_err());
    }

    #[test]
    fn non_square_element_count() {
        let mut s = Scenario::default();
        s.set_param("num_elements", 12.0).unwrap();
        assert_eq!((s.n_h, s.n_v), (12, 1));
    }
}
