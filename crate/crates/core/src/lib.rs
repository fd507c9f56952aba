//! Generalized Kepler–Coulomb systems on the N-dimensional sphere, Euclidean
//! space and hyperbolic space.
//!
//! The curvature `kappa` selects the space (`> 0` sphere, `0` flat, `< 0`
//! hyperbolic). Phase points live in either Poincaré (stereographic) or
//! Beltrami (central projection) canonical coordinates, and every integral of
//! motion is available in both charts.
//!
//! Derivatives are exact: observables are written once, generically over
//! [`Real`], and differentiated with forward-mode [`Dual`] numbers. The
//! [`diffbracket`] module turns those gradients into canonical Poisson
//! brackets, which the [`verify`] campaigns use to check commutation,
//! involution, algebra relations and functional independence.

pub mod diffbracket;
pub mod dual;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod models;
pub mod observables;
pub mod report;
pub mod verify;

pub use diffbracket::{bracket, gradient, BracketValue, Gradient};
pub use dual::{Dual, Real};

pub use error::{Error, Result};
pub use geometry::{AmbientPoint, Chart, Curvature, PhasePoint, PointSampler};
pub use models::{CoalgebraTriple, ModelClass, ModelParams};
pub use observables::{Observable, ObservableId};
pub use dynamics::{IntegratorConfig, Method, Trajectory};
pub use verify::{AlgebraReport, IdentitySpec, IndependenceReport};

/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
