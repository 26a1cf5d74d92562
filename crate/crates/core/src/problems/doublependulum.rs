//! Double pendulum in first-order form with state `(θ1, θ2, ω1, ω2)`.
//!
//! Angles are measured counterclockwise from the downward vertical,
//! `Δ = θ2 − θ1` and `m = m1 + m2`. The angular velocities enter squared.
//! No analytic Jacobian is provided.

use rand::RngCore;

use crate::error::ProblemError;
use crate::params::{Constraint, ParamValue, ParameterSchema, Parameters};
use crate::problem::Problem;
use crate::registry::{Family, Preset, PresetDefaults};
use crate::rhs::RhsBundle;

use super::sample_box;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoublePendulumParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub g: f64,
}

impl DoublePendulumParams {
    pub fn from_parameters(p: &Parameters) -> Result<Self, ProblemError> {
        Ok(Self {
            m1: p.scalar("m1")?,
            m2: p.scalar("m2")?,
            l1: p.scalar("l1")?,
            l2: p.scalar("l2")?,
            g: p.scalar("g")?,
        })
    }

    /// Total mechanical energy (kinetic plus potential).
    pub fn energy(&self, y: &[f64]) -> f64 {
        let Self { m1, m2, l1, l2, g } = *self;
        let m = m1 + m2;
        let (t1, t2, w1, w2) = (y[0], y[1], y[2], y[3]);
        let kinetic = 0.5 * m * l1 * l1 * w1 * w1 + 0.5 * m2 * l2 * l2 * w2 * w2 + m2 * l1 * l2 * w1 * w2 * (t1 - t2).cos();
        let potential = -m * g * l1 * t1.cos() - m2 * g * l2 * t2.cos();
        kinetic + potential
    }
}

pub fn rhs(p: &DoublePendulumParams, y: &[f64], dy: &mut [f64]) {
    let DoublePendulumParams { m1, m2, l1, l2, g } = *p;
    let m = m1 + m2;
    let (t1, t2, w1, w2) = (y[0], y[1], y[2], y[3]);
    let delta = t2 - t1;
    let (sd, cd) = delta.sin_cos();
    let den1 = m * l1 - m2 * l1 * cd * cd;
    let den2 = m * l2 - m2 * l2 * cd * cd;
    dy[0] = w1;
    dy[1] = w2;
    dy[2] = (m2 * l1 * w1 * w1 * sd * cd + m2 * g * t2.sin() * cd + m2 * l2 * w2 * w2 * sd - m * g * t1.sin()) / den1;
    dy[3] = (-m2 * l2 * w2 * w2 * sd * cd + m * (g * t1.sin() * cd - l1 * w1 * w1 * sd - g * t2.sin())) / den2;
}

pub fn schema() -> ParameterSchema {
    use Constraint::*;
    ParameterSchema::new()
        .field("m1", &[Scalar, Finite, Positive], "mass of the first bob")
        .field("m2", &[Scalar, Finite, Positive], "mass of the second bob")
        .field("l1", &[Scalar, Finite, Positive], "length of the first rod")
        .field("l2", &[Scalar, Finite, Positive], "length of the second rod")
        .field("g", &[Scalar, Finite, Positive], "gravitational acceleration")
}

fn build(params: &Parameters) -> Result<RhsBundle, ProblemError> {
    let p = DoublePendulumParams::from_parameters(params)?;
    Ok(RhsBundle::infallible(4, move |_, y, dy| rhs(&p, y, dy)))
}

/// Angles in [-pi, pi], angular velocities in [-3, 3].
fn sample(_: &Problem, rng: &mut dyn RngCore) -> Vec<f64> {
    use std::f64::consts::PI;
    sample_box(rng, &[(-PI, PI), (-PI, PI), (-3.0, 3.0), (-3.0, 3.0)])
}

fn canonical() -> PresetDefaults {
    let params = Parameters::new()
        .with("m1", ParamValue::Scalar(1.0))
        .with("m2", ParamValue::Scalar(1.0))
        .with("l1", ParamValue::Scalar(1.0))
        .with("l2", ParamValue::Scalar(1.0))
        .with("g", ParamValue::Scalar(9.81));
    let half_pi = std::f64::consts::FRAC_PI_2;
    PresetDefaults::new(params, (0.0, 10.0), move |_| Ok(vec![half_pi, half_pi, 0.0, 0.0]))
}

pub(crate) static FAMILY: Family = Family {
    name: "doublependulum",
    title: "Double Pendulum",
    size_label: "4",
    description: "two pendulums joined end to end by massless rods; chaotic",
    schema,
    build,
    sample_state: sample,
    presets: &[Preset {
        name: "Canonical",
        description: "unit masses and rods, g=9.81, both arms horizontal at rest, t in [0,10]",
        defaults: canonical,
    }],
};

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn params() -> DoublePendulumParams {
        DoublePendulumParams { m1: 1.3, m2: 0.7, l1: 0.9, l2: 1.4, g: 9.81 }
    }

    #[test]
    fn hanging_rest_is_an_equilibrium() {
        let mut dy = [1.0; 4];
        rhs(&params(), &[0.0; 4], &mut dy);
        assert_eq!(dy, [0.0; 4]);
    }

    #[test]
    fn energy_is_conserved_by_the_vector_field() {
        // dE/dt = grad(E) . f must vanish; check with central differences
        let p = params();
        let y = [0.4, -1.1, 0.8, 2.3];
        let mut f = [0.0; 4];
        rhs(&p, &y, &mut f);
        let h = 1e-6;
        let de: f64 = (0..4)
            .map(|i| {
                let (mut a, mut b) = (y, y);
                a[i] += h;
                b[i] -= h;
                (p.energy(&a) - p.energy(&b)) / (2.0 * h) * f[i]
            })
            .sum();
        assert!(de.abs() < 1e-7, "dE/dt = {de}");
    }

    #[test]
    fn small_angle_frequencies() {
        let p = params();
        let m = p.m1 + p.m2;
        // analytic linearization: M theta'' = -K theta
        let mass = DMatrix::from_row_slice(2, 2, &[m * p.l1 * p.l1, p.m2 * p.l1 * p.l2, p.m2 * p.l1 * p.l2, p.m2 * p.l2 * p.l2]);
        let stiff = DMatrix::from_row_slice(2, 2, &[m * p.g * p.l1, 0.0, 0.0, p.m2 * p.g * p.l2]);
        let mut expect: Vec<f64> = (mass.try_inverse().unwrap() * stiff).eigenvalues().unwrap().iter().copied().collect();
        expect.sort_by(f64::total_cmp);

        let h = 1e-6;
        let mut block = DMatrix::zeros(2, 2);
        for j in 0..2 {
            let (mut a, mut b) = ([0.0; 4], [0.0; 4]);
            a[j] = h;
            b[j] = -h;
            let (mut fa, mut fb) = ([0.0; 4], [0.0; 4]);
            rhs(&p, &a, &mut fa);
            rhs(&p, &b, &mut fb);
            for i in 0..2 {
                block[(i, j)] = -(fa[2 + i] - fb[2 + i]) / (2.0 * h);
            }
        }
        let mut got: Vec<f64> = block.eigenvalues().unwrap().iter().copied().collect();
        got.sort_by(f64::total_cmp);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g.sqrt() - e.sqrt()).abs() < 1e-3 * e.sqrt(), "{got:?} vs {expect:?}");
        }
    }
}
