//! Empirical center-outward distribution functions, quantile maps, ranks and
//! signs, computed from an exact optimal assignment of the sample onto a
//! discretized spherical uniform law.

pub mod assignment;
pub mod cubature;
pub mod error;
pub mod experiments;
pub mod grid;
mod linalg;
pub mod measure;
pub mod oracles;
pub mod points;
pub mod potential;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PointSetF64 = points::PointSet<f64>;
pub type SphericalGridF64 = grid::SphericalGrid<f64>;
pub type SphericalUniformF64 = measure::SphericalUniform<f64>;
pub type AssignmentResultF64 = assignment::AssignmentResult<f64>;
pub type MaxAffinePotentialF64 = potential::MaxAffinePotential<f64>;
pub type EmpiricalMapF64 = potential::EmpiricalMap<f64>;
