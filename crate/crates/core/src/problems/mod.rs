//! Concrete problem families.

pub mod bouncingball;
pub mod bpe;
pub mod brusselator;
pub mod doublependulum;
pub mod grayscott;
pub mod hires;
pub mod linear;
pub mod lorenz63;
pub mod lorenz96;
pub mod qgso;

use rand::{Rng, RngCore};

use crate::error::ProblemError;

/// Uniform draw from an axis-aligned box, one `(lo, hi)` pair per variable.
pub(crate) fn sample_box(rng: &mut dyn RngCore, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect()
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<(), ProblemError> {
    if expected == actual {
        Ok(())
    } else {
        Err(ProblemError::DimensionMismatch { expected, actual })
    }
}
