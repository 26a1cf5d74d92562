//! Discrete operators for the semi-discretized PDE problems.

pub mod arakawa;
pub mod banded;
pub mod grid;
pub mod helmholtz;
pub mod operators;
pub mod sparse;

pub use banded::BandedCholesky;
pub use grid::{Boundary, Grid2D};
pub use helmholtz::{Helmholtz, LinearSolverKind};
pub use sparse::CsrMatrix;
