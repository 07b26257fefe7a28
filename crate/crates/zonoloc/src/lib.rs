//! Guaranteed set-membership localization for chained agents that measure
//! ranges to a neighbor, built on an extended constrained-zonotope calculus.
//!
//! Layering, bottom up:
//! - [`scalar`]: the `Real` trait the core math is generic over.
//! - [`lp`]: dense bounded-variable simplex behind every set query.
//! - [`set`]: extended constrained zonotopes and interval hulls.
//!
//! The `f64` aliases below are the working types for everything concrete.

pub mod filter;
pub mod geom;
pub mod lp;
pub mod scalar;
pub mod set;
pub mod sim;

pub use filter::{
    AgentModel, AgentRole, ChainState, FilterError, MeasurementRecord, StepFlags, UpdateOutcome,
};
pub use geom::{
    BearingInterval, GeomError, RangeRing, RelativeDiagnostics, SectorWindow, WindowSelection,
};
pub use scalar::Real;
pub use set::{Emptiness, ExtConstrainedZonotope, IntervalHull, SetError, ZonotopeRecord};
pub use sim::{McSummary, RunLog, SimConfig, SimError};

/// Extended constrained zonotope over the default scalar.
pub type Zonotope64 = ExtConstrainedZonotope<f64>;
/// Interval hull over the default scalar.
pub type Hull64 = IntervalHull<f64>;
