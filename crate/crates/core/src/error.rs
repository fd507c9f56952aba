use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `1 + kappa q^2 <= 0` or a non-finite coordinate.
    #[error("phase point outside the chart domain: {0}")]
    Domain(String),

    /// `1 - kappa q^2 = 0`: the Beltrami chart is singular on the equator of S^N.
    #[error("Poincaré point maps onto the Beltrami chart singularity (1 - kappa q^2 = {0:e})")]
    ChartSingular(f64),

    #[error("observable is singular at the origin q = 0")]
    Origin,

    #[error("centrifugal term {index} is singular: q_{index} = 0 with b_{index} != 0")]
    CentrifugalSingularity { index: usize },

    #[error("index error: {0}")]
    Index(String),

    #[error("model class error: {0}")]
    ModelClass(String),

    #[error("chart mismatch: expected {expected}, got {found}")]
    ChartMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("sampler exhausted after {attempts} attempts: {reason}")]
    Sampler { attempts: usize, reason: String },

    #[error("Newton iteration diverged at step {step} (residual {residual:e})")]
    NewtonDivergence { step: usize, residual: f64 },

    #[error("state left the chart domain at step {step}")]
    DomainExit { step: usize },

    #[error("state approached centrifugal wall {index} at step {step} (|q_{index}| = {distance:e})")]
    CentrifugalWallApproach {
        step: usize,
        index: usize,
        distance: f64,
    },

    #[error("trajectory is not bounded: {0}")]
    NotBounded(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Step index carried by integration errors.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::NewtonDivergence { step, .. }
            | Error::DomainExit { step }
            | Error::CentrifugalWallApproach { step, .. } => Some(*step),
            _ => None,
        }
    }
}
