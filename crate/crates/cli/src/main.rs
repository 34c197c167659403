//! `bundle-reduction report|verify|simulate`.

use std::path::PathBuf;
use std::process::ExitCode;

use bundle_reduction_cli::config::{parse_eps_f, parse_point, parse_points};
use bundle_reduction_cli::{run, CliError, Command, Format, RunConfig};
use clap::Parser;

/// Curvature reports, identity suites and Monte Carlo reduction checks on
/// principal-bundle scenarios. Flags override fields of --config.
#[derive(Debug, Parser)]
#[command(name = "bundle-reduction", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario name (flat_torus_u1, flat_torus_u1_tilted, polar_plane_u1, hopf_s3, su2_self).
    #[arg(long)]
    scenario: Option<String>,
    /// Flat JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Oracle table file replacing the built-in one.
    #[arg(long)]
    scenario_file: Option<PathBuf>,
    /// Evaluation points, e.g. "0.5,0;1,0;2,0".
    #[arg(long)]
    points: Option<String>,
    /// Extra random gauge-surface points.
    #[arg(long)]
    random_points: Option<usize>,
    /// Sign of the field-strength term (+1 or -1).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_eps_f)]
    eps_f: Option<f64>,
    /// Tolerance replacing every per-row tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Relative finite-difference step.
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    mu2_kappa: Option<f64>,
    /// Time horizon.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest tolerated fraction of paths leaving the chart.
    #[arg(long)]
    max_killed_fraction: Option<f64>,
    /// Start point of the simulation, e.g. "2.5,0".
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// cos_x0, bump or x0_sq.
    #[arg(long)]
    test_function: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Cli {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(c) = base.command {
            if c != self.command {
                return Err(CliError::Usage(format!("config is for `{}` but `{}` was requested", c.name(), self.command.name())));
            }
        }
        let flags = RunConfig {
            command: Some(self.command),
            scenario: self.scenario,
            scenario_file: self.scenario_file,
            points: self.points.as_deref().map(parse_points).transpose()?,
            random_points: self.random_points,
            fd_step: self.fd_step,
            eps_f: self.eps_f,
            tolerance: self.tolerance,
            mu2_kappa: self.mu2_kappa,
            t: self.t,
            dt: self.dt,
            n_paths: self.paths,
            seed: self.seed,
            max_killed_fraction: self.max_killed_fraction,
            start: self.start.as_deref().map(parse_point).transpose()?,
            test_function: self.test_function,
            out: self.out,
            format: self.format,
            ..RunConfig::default()
        };
        Ok(base.overlay(flags))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.into_config().and_then(|cfg| {
        let (format, out) = (cfg.format.unwrap_or_default(), cfg.out.clone());
        let outcome = run(cfg)?;
        outcome.report.write(format, out.as_deref())?;
        Ok(outcome)
    });
    match result {
        Ok(o) => {
            let r = &o.report;
            eprintln!("{} {}: {} rows, {} failed", r.command, r.scenario, r.rows.len(), r.n_failed);
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
