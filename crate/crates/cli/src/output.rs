//! Result rows and their JSON and CSV encodings.

use std::io::Write;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// One result. Optional fields are `null` in JSON and empty in CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub quantity: String,
    /// Evaluation point; `None` for aggregates over several points.
    pub point: Option<Vec<f64>>,
    pub value: f64,
    pub standard_error: Option<f64>,
    pub oracle: Option<f64>,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    /// `None` for informational rows that are not checked.
    pub pass: Option<bool>,
    pub provenance: String,
    pub n_paths: Option<usize>,
    pub n_killed: Option<usize>,
    pub n_excluded: Option<usize>,
    pub seed: Option<u64>,
}

impl Row {
    pub fn info(quantity: impl Into<String>, point: Option<&[f64]>, value: f64, provenance: impl Into<String>) -> Self {
        Row {
            quantity: quantity.into(),
            point: point.map(<[f64]>::to_vec),
            value,
            standard_error: None,
            oracle: None,
            residual: None,
            tolerance: None,
            pass: None,
            provenance: provenance.into(),
            n_paths: None,
            n_killed: None,
            n_excluded: None,
            seed: None,
        }
    }

    /// Compare against `oracle` with an absolute tolerance.
    pub fn checked(mut self, oracle: f64, tolerance: f64) -> Self {
        let residual = (self.value - oracle).abs();
        self.oracle = Some(oracle);
        self.residual = Some(residual);
        self.tolerance = Some(tolerance);
        self.pass = Some(residual <= tolerance);
        self
    }
}

/// Everything one command writes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub scenario: String,
    /// Effective configuration without the output settings.
    pub config: RunConfig,
    pub pass: bool,
    pub n_failed: usize,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(command: &str, scenario: &str, mut config: RunConfig, rows: Vec<Row>) -> Self {
        config.out = None;
        config.format = None;
        let n_failed = rows.iter().filter(|r| r.pass == Some(false)).count();
        Report { command: command.into(), scenario: scenario.into(), config, pass: n_failed == 0, n_failed, rows }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Usage(format!("csv encoding failed: {e}"));
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
            let int = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_default();
            let point = r.point.as_ref().map(|p| p.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" ")).unwrap_or_default();
            w.write_record([
                self.command.clone(),
                self.scenario.clone(),
                r.quantity.clone(),
                point,
                num(r.value),
                opt(r.standard_error),
                opt(r.oracle),
                opt(r.residual),
                opt(r.tolerance),
                r.pass.map(|p| p.to_string()).unwrap_or_default(),
                r.provenance.clone(),
                int(r.n_paths),
                int(r.n_killed),
                int(r.n_excluded),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv encoding failed: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Write to `out` (stdout when `None`) in the chosen format.
    pub fn write(&self, format: crate::config::Format, out: Option<&std::path::Path>) -> Result<()> {
        let text = match format {
            crate::config::Format::Json => self.to_json(),
            crate::config::Format::Csv => self.to_csv()?,
        };
        match out {
            Some(p) => std::fs::write(p, text).map_err(|source| CliError::Write { path: p.into(), source }),
            None => std::io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Write { path: "<stdout>".into(), source }),
        }
    }
}

pub const CSV_HEADER: [&str; 15] = [
    "command",
    "scenario",
    "quantity",
    "point",
    "value",
    "standard_error",
    "oracle",
    "residual",
    "tolerance",
    "pass",
    "provenance",
    "n_paths",
    "n_killed",
    "n_excluded",
    "seed",
];

/// 17 significant digits in scientific notation; `NaN`, `inf`, `-inf` otherwise.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}
