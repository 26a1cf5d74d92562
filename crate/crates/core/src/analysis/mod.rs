//! Chaos and verification analytics.

mod convergence;
mod derivatives;
mod lyapunov;

pub use convergence::{convergence_order, ConvergenceResult};
pub use derivatives::{check_jacobian, check_products, ProductCheck};
pub use lyapunov::{kaplan_yorke, lyapunov_spectrum, LyapunovOptions, LyapunovResult, LyapunovScheme};
