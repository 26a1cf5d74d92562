//! Brusselator: `x' = 1 − (b + 1)x + a x² y`, `y' = b x − a x² y`, with the
//! additive splitting into a `linear` part (including the constant source)
//! and a `nonlinear` part.
//!
//! Canonical: a = 1, b = 3, `y0 = (1, 1)`, `t ∈ [0, 20]` (limit cycle, since
//! b > 1 + a).

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::ProblemError;
use crate::params::{Constraint, ParamValue, ParameterSchema, Parameters};
use crate::problem::Problem;
use crate::registry::{Family, Preset, PresetDefaults};
use crate::rhs::RhsBundle;

use super::sample_box;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrusselatorParams {
    pub a: f64,
    pub b: f64,
}

impl BrusselatorParams {
    pub fn from_parameters(p: &Parameters) -> Result<Self, ProblemError> {
        Ok(Self { a: p.scalar("a")?, b: p.scalar("b")? })
    }
}

pub fn linear_part(p: &BrusselatorParams, y: &[f64], dy: &mut [f64]) {
    dy[0] = 1.0 - (p.b + 1.0) * y[0];
    dy[1] = p.b * y[0];
}

pub fn nonlinear_part(p: &BrusselatorParams, y: &[f64], dy: &mut [f64]) {
    let r = p.a * y[0] * y[0] * y[1];
    dy[0] = r;
    dy[1] = -r;
}

/// Full right-hand side, evaluated as `linear + nonlinear` so the splitting
/// sums to it exactly.
pub fn rhs(p: &BrusselatorParams, y: &[f64], dy: &mut [f64]) {
    let mut lin = [0.0; 2];
    let mut non = [0.0; 2];
    linear_part(p, y, &mut lin);
    nonlinear_part(p, y, &mut non);
    dy[0] = lin[0] + non[0];
    dy[1] = lin[1] + non[1];
}

pub fn jacobian(p: &BrusselatorParams, y: &[f64]) -> DMatrix<f64> {
    let (x, yy) = (y[0], y[1]);
    DMatrix::from_row_slice(
        2,
        2,
        &[-(p.b + 1.0) + 2.0 * p.a * x * yy, p.a * x * x, p.b - 2.0 * p.a * x * yy, -p.a * x * x],
    )
}

pub fn schema() -> ParameterSchema {
    use Constraint::*;
    ParameterSchema::new()
        .field("a", &[Scalar, Finite, Positive], "autocatalytic rate")
        .field("b", &[Scalar, Finite, Positive], "feed rate of the second reactant")
}

fn build(params: &Parameters) -> Result<RhsBundle, ProblemError> {
    let p = BrusselatorParams::from_parameters(params)?;
    let linear = RhsBundle::infallible(2, move |_, y, dy| linear_part(&p, y, dy))
        .with_jacobian(move |_, _| Ok(DMatrix::from_row_slice(2, 2, &[-(p.b + 1.0), 0.0, p.b, 0.0])))
        .with_products_from_jacobian();
    let nonlinear = RhsBundle::infallible(2, move |_, y, dy| nonlinear_part(&p, y, dy))
        .with_jacobian(move |_, y| {
            let (x, yy) = (y[0], y[1]);
            let (dx, dy) = (2.0 * p.a * x * yy, p.a * x * x);
            Ok(DMatrix::from_row_slice(2, 2, &[dx, dy, -dx, -dy]))
        })
        .with_products_from_jacobian();
    Ok(RhsBundle::infallible(2, move |_, y, dy| rhs(&p, y, dy))
        .with_jacobian(move |_, y| Ok(jacobian(&p, y)))
        .with_products_from_jacobian()
        .with_partition("linear", linear)
        .with_partition("nonlinear", nonlinear))
}

/// Concentrations in [0, 5]².
fn sample(_: &Problem, rng: &mut dyn RngCore) -> Vec<f64> {
    sample_box(rng, &[(0.0, 5.0), (0.0, 5.0)])
}

fn canonical() -> PresetDefaults {
    let params = Parameters::new().with("a", ParamValue::Scalar(1.0)).with("b", ParamValue::Scalar(3.0));
    PresetDefaults::new(params, (0.0, 20.0), |_| Ok(vec![1.0, 1.0]))
}

pub(crate) static FAMILY: Family = Family {
    name: "brusselator",
    title: "Brusselator",
    size_label: "2",
    description: "autocatalytic reaction with a linear/nonlinear splitting",
    schema,
    build,
    sample_state: sample,
    presets: &[Preset { name: "Canonical", description: "a=1, b=3, y0=(1,1), t in [0,20]", defaults: canonical }],
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let p = BrusselatorParams { a: 1.0, b: 3.0 };
        let mut f = [0.0; 2];
        rhs(&p, &[1.0, 1.0], &mut f);
        assert_eq!(f, [-2.0, 2.0]);
        rhs(&p, &[0.0, 7.5], &mut f);
        assert_eq!(f, [1.0, 0.0]);
    }

    #[test]
    fn partitions_sum_exactly() {
        let problem = crate::registry::canonical("brusselator").unwrap();
        let rhs = problem.rhs();
        let lin = rhs.partition("linear").unwrap();
        let non = rhs.partition("nonlinear").unwrap();
        for y in [[0.3, 1.7], [4.9, 0.01], [2.5, 2.5]] {
            let f = rhs.eval(0.0, &y).unwrap();
            let a = lin.eval(0.0, &y).unwrap();
            let b = non.eval(0.0, &y).unwrap();
            assert_eq!(f, vec![a[0] + b[0], a[1] + b[1]]);
        }
    }
}
