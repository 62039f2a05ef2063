//! Spectral laboratory for energy decay of the damped fractional
//! Klein–Gordon equation `u_tt + a(x) u_t + (1-Δ)^{s/2} u = 0` on a periodic box.

pub mod damping;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod linalg;
pub mod ratefit;
pub mod resolvent;
pub mod scalar;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use scalar::{Complex, Rate, Real};

/// Double-precision aliases.
pub type Grid = spectral::TorusGrid<f64>;
pub type Field = spectral::SpectralField<f64>;
pub type Damping = damping::DampingSpec<f64>;
pub type State = evolution::StatePair<f64>;
pub type Dynamics = evolution::Generator<f64>;
pub type Curve = evolution::Trajectory<f64>;
pub type Sweep = resolvent::SweepResult<f64>;
pub type Gcc = geometry::GccReport<f64>;
pub type Class = theory::StabilityClass<f64>;
pub type ExactClass = theory::StabilityClass<num_rational::Ratio<i64>>;
pub type FactSet = theory::Facts<f64>;
