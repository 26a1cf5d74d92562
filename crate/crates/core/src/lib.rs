//! Initial value test problems for time integrators.
//!
//! A [`Problem`] bundles parameters, a time span, an initial state and a
//! [`RhsBundle`] holding the right-hand side together with whatever
//! Jacobians, Jacobian-vector products, additive splittings, events and exact
//! solutions the family provides. Problems are built from named presets:
//!
//! ```
//! use ivpsuite::{build_preset, ParamValue, Parameters};
//!
//! let p = build_preset("lorenz63", "Canonical", &Parameters::new()).unwrap();
//! assert_eq!(p.f(0.0, p.y0()).unwrap()[0], 10.0);
//!
//! let bad = Parameters::new().with("rho", ParamValue::Scalar(-1.0));
//! let err = build_preset("lorenz63", "Canonical", &bad).unwrap_err();
//! assert_eq!(err.to_string(), "The field rho does not satisfy nonnegative");
//! ```
//!
//! The [`integrators`] module provides reference methods (Dormand–Prince
//! 5(4), fixed-step RK4 and Euler, implicit SDIRK4 and TR-BDF2, and an
//! event-loop driver); [`analysis`] the Lyapunov spectrum, Kaplan–Yorke
//! dimension, convergence order and finite-difference Jacobian checks;
//! [`export`] CSV and JSON trajectory files and gnuplot scripts.

pub mod analysis;
pub mod error;
pub mod export;
pub mod integrators;
pub mod params;
pub mod pde;
pub mod problem;
pub mod problems;
pub mod registry;
pub mod rhs;

pub use error::{AnalysisError, IntegrationError, ProblemError};
pub use params::{Constraint, FunctionParam, ParamValue, ParameterSchema, Parameters};
pub use problem::Problem;
pub use registry::{build_preset, canonical, families, family, Family, Preset};
pub use rhs::{Event, EventDirection, EventOutcome, LinearOperator, RhsBundle};
