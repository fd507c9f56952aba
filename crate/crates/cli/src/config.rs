//! Run configuration: one JSON document, overridden field by field by
//! command-line flags.
//!
//! Precedence, highest first: command-line flag, config file, the
//! `CURVED_KEPLER_SEED` environment variable (seed only), built-in default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use curved_kepler::dynamics::{IntegratorConfig, Method};
use curved_kepler::verify::{DEFAULT_SV_TOLERANCE, DEFAULT_TOLERANCE};
use curved_kepler::{Chart, ModelParams, ObservableId, PhasePoint};

use crate::CliError;

pub const SEED_ENV: &str = "CURVED_KEPLER_SEED";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub deterministic: bool,
    /// No progress lines on stderr; errors are still printed.
    #[serde(default)]
    pub quiet: bool,
    /// Report path; stdout when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: Option<ModelParams>,
    #[serde(default)]
    pub chart: Option<Chart>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub rank: RankSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub limits: LimitsSection,
    #[serde(default)]
    pub transform: TransformSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Suite names; empty means every suite that applies to the model.
    pub suites: Vec<String>,
    pub sample: usize,
    pub tolerance: f64,
    /// Also check both Casimir chains for involution.
    pub involution: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            suites: Vec::new(),
            sample: 200,
            tolerance: DEFAULT_TOLERANCE,
            involution: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetChoice {
    /// Quadratic integrals plus one hidden integral: `2N - 1` functions.
    Maximal,
    /// The `2N - 2` quadratic integrals.
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankSection {
    pub points: usize,
    pub sv_tolerance: f64,
    pub set: SetChoice,
    /// Replaces `set` when present.
    pub observables: Option<Vec<ObservableId>>,
    /// Appended to the chosen set.
    pub extra: Vec<ObservableId>,
    /// Exit with status 1 when the modal rank differs.
    pub expected_rank: Option<usize>,
}

impl Default for RankSection {
    fn default() -> Self {
        Self {
            points: 20,
            sv_tolerance: DEFAULT_SV_TOLERANCE,
            set: SetChoice::Maximal,
            observables: None,
            extra: Vec::new(),
            expected_rank: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub integrator: IntegratorConfig,
    /// Explicit start; a quasi-circular start is sampled when absent.
    pub start: Option<PhasePoint>,
    pub radius_band: (f64, f64),
    pub perturbation: f64,
    /// Logged observables; defaults to `H`, every Casimir and every hidden integral.
    pub observables: Option<Vec<ObservableId>>,
    pub csv: Option<PathBuf>,
    pub trajectory_json: Option<PathBuf>,
    pub drift_tolerance: Option<f64>,
    pub closure_tolerance: Option<f64>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::new(1e-3, 10_000, Method::ImplicitMidpoint).expect("valid default"),
            start: None,
            radius_band: (0.35, 0.65),
            perturbation: 0.05,
            observables: None,
            csv: None,
            trajectory_json: None,
            drift_tolerance: None,
            closure_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitsSection {
    pub epsilons: Vec<f64>,
    pub kappa_epsilon: f64,
    pub points: usize,
    pub slope_tolerance: f64,
    pub continuity_tolerance: f64,
    pub min_coord: f64,
}

impl Default for LimitsSection {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-2, 1e-4, 1e-6],
            kappa_epsilon: 1e-8,
            points: 20,
            slope_tolerance: 0.05,
            continuity_tolerance: 1e-6,
            min_coord: 0.3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
    /// State file to convert.
    pub input: Option<PathBuf>,
    /// Target chart; the other chart when absent.
    pub to: Option<Chart>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn params(&self) -> Result<&ModelParams, CliError> {
        let params = self
            .params
            .as_ref()
            .ok_or_else(|| CliError::Config("model parameters missing (config `params` or --kappa/--coupling/--b)".into()))?;
        params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(params)
    }

    pub fn chart(&self) -> Chart {
        self.chart.unwrap_or(Chart::Poincare)
    }

    /// Flag, then config file, then the environment, then 0 for
    /// deterministic runs or fresh entropy otherwise.
    pub fn resolve_seed(&self, env: Option<&str>) -> Result<u64, CliError> {
        if let Some(seed) = self.seed {
            return Ok(seed);
        }
        if let Some(raw) = env {
            return raw
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}='{raw}' is not an unsigned integer")));
        }
        Ok(if self.deterministic { 0 } else { rand::random() })
    }
}
