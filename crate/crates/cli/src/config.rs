//! Run configuration: a flat JSON document, overridden field by field by
//! command-line flags.

use std::path::{Path, PathBuf};

use bundle_reduction::{FSign, SdeConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Report,
    Verify,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Report => "report",
            Command::Verify => "verify",
            Command::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Every field is optional; unset fields take the defaults listed in
/// `docs/cli.md`. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub scenario: Option<String>,
    /// Oracle table replacing the built-in one.
    pub scenario_file: Option<PathBuf>,
    /// Evaluation points on the gauge surface.
    pub points: Option<Vec<Vec<f64>>>,
    /// Extra random gauge-surface points drawn with `seed`.
    pub random_points: Option<usize>,
    pub fd_step: Option<f64>,
    pub eps_f: Option<f64>,
    /// Replaces every per-row tolerance.
    pub tolerance: Option<f64>,
    pub mu2_kappa: Option<f64>,
    pub t: Option<f64>,
    pub dt: Option<f64>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
    pub group_nodes: Option<usize>,
    pub max_killed_fraction: Option<f64>,
    /// Number of standard errors allowed in Monte Carlo comparisons.
    pub z_threshold: Option<f64>,
    pub start: Option<Vec<f64>>,
    pub test_function: Option<String>,
    /// Also estimate the reduced pairing with the `J̃` weight and its prefactor variants.
    pub reduced_m: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:ident, $over:ident, $($f:ident),*) => {
        $( if $over.$f.is_some() { $base.$f = $over.$f; } )*
    };
}

impl RunConfig {
    /// Read a config file; relative paths inside it are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        let mut c: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Parse { what: "config", path: path.into(), message: e.to_string() })?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [&mut c.scenario_file, &mut c.out].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(c)
    }

    /// Fields set in `over` replace those of `self`.
    pub fn overlay(mut self, over: RunConfig) -> Self {
        overlay!(
            self,
            over,
            command,
            scenario,
            scenario_file,
            points,
            random_points,
            fd_step,
            eps_f,
            tolerance,
            mu2_kappa,
            t,
            dt,
            n_paths,
            seed,
            group_nodes,
            max_killed_fraction,
            z_threshold,
            start,
            test_function,
            reduced_m,
            out,
            format
        );
        self
    }

    /// Range checks that do not need the scenario.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Usage(format!("{name} must be positive and finite, got {x}"))),
            _ => Ok(()),
        };
        positive("fd_step", self.fd_step)?;
        positive("mu2_kappa", self.mu2_kappa)?;
        positive("t", self.t)?;
        positive("dt", self.dt)?;
        positive("z_threshold", self.z_threshold)?;
        if let Some(x) = self.tolerance {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(CliError::Usage(format!("tolerance must be non-negative and finite, got {x}")));
            }
        }
        if let Some(v) = self.eps_f {
            FSign::from_value(v)?;
        }
        if self.n_paths == Some(0) {
            return Err(CliError::Usage("n_paths must be at least 1".into()));
        }
        if self.group_nodes == Some(0) {
            return Err(CliError::Usage("group_nodes must be at least 1".into()));
        }
        if let Some(f) = self.max_killed_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(CliError::Usage(format!("max_killed_fraction must lie in [0, 1], got {f}")));
            }
        }
        if let (Some(t), Some(dt)) = (self.t, self.dt) {
            if dt > t {
                return Err(CliError::Usage(format!("dt = {dt} exceeds the horizon t = {t}")));
            }
        }
        for p in self.points.iter().flatten().chain(self.start.iter()) {
            if p.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Usage(format!("point {p:?} has non-finite coordinates")));
            }
        }
        Ok(())
    }

    /// Simulation settings with defaults filled in.
    pub fn sde(&self) -> SdeConfig {
        let mut c = SdeConfig::for_horizon(
            self.mu2_kappa.unwrap_or(1.0),
            self.t.unwrap_or(DEFAULT_T),
            self.dt.unwrap_or(DEFAULT_DT),
            self.n_paths.unwrap_or(DEFAULT_PATHS),
            self.seed.unwrap_or(0),
        );
        if let Some(n) = self.group_nodes {
            c.group_nodes = n;
        }
        if let Some(f) = self.max_killed_fraction {
            c.max_killed_fraction = f;
        }
        if let Some(h) = self.fd_step {
            c.fd = c.fd.with_step(h);
        }
        c
    }
}

pub const DEFAULT_T: f64 = 0.5;
pub const DEFAULT_DT: f64 = 5e-3;
pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_Z: f64 = 3.0;
/// Random points added by `verify` when the config sets none.
pub const DEFAULT_VERIFY_RANDOM_POINTS: usize = 20;
/// Tolerance of the decomposition residual when no override is given.
pub const DEFAULT_DECOMPOSITION_TOL: f64 = 1e-5;
/// Tolerance of the gap between the two `J̃` routes when no override is given.
pub const DEFAULT_JROUTES_TOL: f64 = 1e-6;

/// Parse `"a,b;c,d"` into points.
pub fn parse_points(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(parse_point)
        .collect()
}

/// Parse `"a,b"` into one point.
pub fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("bad coordinate `{x}` in `{s}`: {e}"))))
        .collect()
}

/// Accept `1`, `+1` and `-1`.
pub fn parse_eps_f(s: &str) -> std::result::Result<f64, String> {
    match s.trim() {
        "1" | "+1" | "1.0" | "+1.0" => Ok(1.0),
        "-1" | "-1.0" => Ok(-1.0),
        o => Err(format!("eps_f must be +1 or -1, got `{o}`")),
    }
}
