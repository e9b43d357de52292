//! Numerical toolkit for Wermer-type holomorphic embeddings of the unit ball:
//! the base cubic map, its four-parameter modification assembled from
//! elementary invertible stages, staged parameter tuning against explicit
//! sup-norm targets, numerical non-Runge certificates (witness circles,
//! maximum-principle hull tests, argument-principle zero counting), and a
//! finite-depth inductive chain planting W-degenerate boundary points.

pub mod certify;
pub mod chain;
pub mod composite;
pub mod csvio;
pub mod domain;
pub mod error;
pub mod hashgrid;
pub mod maps;
pub mod point;
pub mod poly;
pub mod sampling;
pub mod scalar;
pub mod tuner;

pub use domain::{Classification, DomainSpec};
pub use error::{Error, Result};
pub use point::{C3Point, Mat3};

/// Version tag stamped into every JSON artifact.
pub const SCHEMA: &str = "wermer-forge/1";
