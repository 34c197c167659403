//! Scenario oracle tables as JSON files.
//!
//! A table file holds the scenario name, the resolved sign of the field
//! strength term and the oracle rows. The files under `data/` mirror the
//! tables built into the library.

use std::path::Path;

use bundle_reduction::{make_scenario, FSign, OracleEntry, Scenario, SCENARIO_NAMES};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleTable {
    pub scenario: String,
    pub eps_f: f64,
    pub oracles: Vec<OracleEntry>,
}

impl OracleTable {
    /// Table built into the library for a named scenario.
    pub fn builtin(name: &str) -> Result<Self> {
        Ok(Self::of(&make_scenario(name)?))
    }

    pub fn of(s: &Scenario) -> Self {
        OracleTable { scenario: s.name.clone(), eps_f: s.eps_f.value(), oracles: s.oracles.clone() }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("oracle table serializes");
        s.push('\n');
        s
    }

    /// Parse and validate a table file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        let parse = |message: String| CliError::Parse { what: "scenario file", path: path.into(), message };
        let t: OracleTable = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
        if !SCENARIO_NAMES.contains(&t.scenario.as_str()) {
            return Err(parse(format!("unknown scenario `{}`; valid names: {}", t.scenario, SCENARIO_NAMES.join(", "))));
        }
        FSign::from_value(t.eps_f).map_err(|e| parse(e.to_string()))?;
        for (i, o) in t.oracles.iter().enumerate() {
            if o.quantity.is_empty() || o.provenance.trim().is_empty() {
                return Err(parse(format!("oracle {i} needs a quantity and a provenance note")));
            }
            if !o.value.is_finite() || !(o.tolerance >= 0.0 && o.tolerance.is_finite()) || o.point.iter().any(|x| !x.is_finite()) {
                return Err(parse(format!("oracle {i} ({}) has a non-finite value, point or tolerance", o.quantity)));
            }
        }
        Ok(t)
    }

    /// Row of `quantity` whose point equals `point` to 1e-9.
    pub fn lookup(&self, quantity: &str, point: &[f64]) -> Option<&OracleEntry> {
        self.oracles
            .iter()
            .find(|o| o.quantity == quantity && o.point.len() == point.len() && o.point.iter().zip(point).all(|(a, b)| (a - b).abs() <= 1e-9))
    }
}
