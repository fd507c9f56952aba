//! Campaign runner behind the `curved-kepler` binary.
//!
//! Exit codes: 0 every check passed, 1 a check failed, 2 configuration
//! error, 3 sampling error, 4 integration error.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use curved_kepler::{Chart, Error};

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("integration error: {0}")]
    Integration(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Sampling(_) => 3,
            CliError::Integration(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Sampler { .. } => CliError::Sampling(e.to_string()),
            Error::NewtonDivergence { .. }
            | Error::DomainExit { .. }
            | Error::CentrifugalWallApproach { .. }
            | Error::NotBounded(_) => CliError::Integration(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "curved-kepler", version, about = "Verify integrals of motion of generalized Kepler-Coulomb systems on curved spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check bracket identities and involution over sampled points.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Suite to run (repeatable); default: every applicable suite.
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Sampled phase points per identity (default 200).
        #[arg(long)]
        sample: Option<usize>,
        /// Largest accepted relative residual (default 1e-10).
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Numerical rank of stacked integral gradients.
    Rank {
        #[command(flatten)]
        common: CommonArgs,
        /// Sampled phase points (default 20).
        #[arg(long)]
        points: Option<usize>,
        /// Fail (exit 1) unless the modal rank equals this.
        #[arg(long)]
        expected_rank: Option<usize>,
        /// `maximal` or `quadratic`.
        #[arg(long)]
        set: Option<String>,
    },
    /// Integrate a trajectory and report the drift of logged integrals.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Time step (default 1e-3).
        #[arg(long)]
        step: Option<f64>,
        /// Number of steps (default 10000).
        #[arg(long)]
        steps: Option<usize>,
        /// `implicit-midpoint` or `rk4-reference`.
        #[arg(long)]
        method: Option<String>,
        /// Write the trajectory and logged observables as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the full trajectory as a JSON document.
        #[arg(long)]
        trajectory_json: Option<PathBuf>,
        /// Fail (exit 1) when any logged observable drifts more than this.
        #[arg(long)]
        drift_tolerance: Option<f64>,
        /// Also check that the orbit closes within this phase-space distance.
        #[arg(long)]
        closure_tolerance: Option<f64>,
    },
    /// Convert a state file between the Poincaré and Beltrami charts.
    Transform {
        #[command(flatten)]
        common: CommonArgs,
        /// State document to convert.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Target chart (default: the other one).
        #[arg(long)]
        to: Option<Chart>,
    },
    /// b -> 0 scaling and kappa -> 0 continuity sweeps.
    Limits {
        #[command(flatten)]
        common: CommonArgs,
        /// Sampled phase points (default 20).
        #[arg(long)]
        points: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// RNG seed; overrides the config file and CURVED_KEPLER_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Omit wall-clock metadata so reruns give byte-identical reports.
    #[arg(long)]
    pub deterministic: bool,
    /// Suppress progress lines on stderr.
    #[arg(long, short)]
    pub quiet: bool,
    /// Report path (default: stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Curvature (default 0 when no config params are given).
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Coulomb coupling K (default 1).
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Comma-separated centrifugal strengths; their count sets N.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub b: Option<Vec<f64>>,
    /// `poincare` (default) or `beltrami`.
    #[arg(long)]
    pub chart: Option<Chart>,
}

impl CommonArgs {
    /// Load the config file (if any) and apply the common overrides.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        cfg.deterministic |= self.deterministic;
        cfg.quiet |= self.quiet;
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
        if self.chart.is_some() {
            cfg.chart = self.chart;
        }
        if self.kappa.is_some() || self.coupling.is_some() || self.b.is_some() {
            let base = cfg.params.take();
            let kappa = match (self.kappa, &base) {
                (Some(k), _) => k,
                (None, Some(p)) => p.k(),
                (None, None) => 0.0,
            };
            let coupling = self.coupling.or(base.as_ref().map(|p| p.coupling)).unwrap_or(1.0);
            let b = match (&self.b, &base) {
                (Some(b), _) => b.clone(),
                (None, Some(p)) => p.b.clone(),
                (None, None) => return Err(CliError::Config("--b is required when no config params are given".into())),
            };
            cfg.params = Some(curved_kepler::ModelParams::new(kappa, coupling, b).map_err(|e| CliError::Config(e.to_string()))?);
        }
        Ok(cfg)
    }
}

/// Parse-free entry point used by `main` and the tests: returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match commands::dispatch(cli.command) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("curved-kepler: {e}");
            e.exit_code()
        }
    }
}
