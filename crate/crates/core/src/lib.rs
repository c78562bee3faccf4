//! Density, union and overlap of sphere arrangements on the family of
//! diagonally distorted integer lattices, relaxed packing and covering
//! quality, and a seeded Monte Carlo oracle for checking the closed forms.

pub mod error;
pub mod geometry2d;
pub mod geometry3d;
pub mod lattice;
pub mod measures;
pub mod oracle;
pub mod output;
pub mod quality;
pub mod verify;

mod numeric;
mod polytope;

pub use error::{Error, Result};
pub use lattice::{DistortedLattice, NamedLattice, NearestPointSearch};
pub use measures::{Constraint, LatticeMeasures, MeasureReport, OverlapMeasure};
pub use oracle::McEstimate;
pub use quality::{QualityMode, QualityQuery, QualityResult};
