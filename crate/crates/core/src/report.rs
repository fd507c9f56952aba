//! JSON artifacts. Every document carries `schema_version` and the seed and
//! parameters that produced it, so a report alone is enough to rerun it.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Closure, Drift, IntegratorConfig, Trajectory};
use crate::geometry::{Chart, PhasePoint};
use crate::models::ModelParams;
use crate::verify::{AlgebraReport, IndependenceReport, LimitReport};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    pub seed: u64,
    pub params: ModelParams,
    pub chart: Chart,
    pub pass: bool,
    /// Wall-clock metadata; left out of deterministic runs so that
    /// identical inputs give byte-identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub generated_unix: u64,
    pub elapsed_seconds: f64,
    pub threads: usize,
}

impl<T> Envelope<T> {
    pub fn new(kind: &str, seed: u64, params: ModelParams, chart: Chart, pass: bool, body: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            seed,
            params,
            chart,
            pass,
            run: None,
            body,
        }
    }
}

pub type VerifyDocument = Envelope<Vec<AlgebraReport>>;
pub type RankDocument = Envelope<IndependenceReport>;
pub type LimitDocument = Envelope<LimitReport>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationBody {
    pub start: PhasePoint,
    pub integrator: IntegratorConfig,
    pub drifts: Vec<Drift>,
    /// Largest drift allowed for a pass, when one was requested.
    pub drift_tolerance: Option<f64>,
    pub closure: Option<Closure>,
}

pub type SimulationDocument = Envelope<SimulationBody>;
pub type TrajectoryDocument = Envelope<Trajectory>;

/// A single phase point, as read and written by chart conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDocument {
    pub schema_version: u32,
    pub kappa: f64,
    pub state: PhasePoint,
}
