//! Bouncing ball over a differentiable ground profile `h(x)`.
//!
//! State `(x, y, vx, vy)`, free flight `f = (vx, vy, 0, −g)`. The event value
//! is the height above ground `y − h(x)`; when it falls through zero the
//! velocity is reflected across the ground tangent and integration resumes.

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ProblemError;
use crate::params::{Constraint, FunctionParam, ParamValue, ParameterSchema, Parameters, ScalarFn};
use crate::problem::Problem;
use crate::registry::{Family, Preset, PresetDefaults};
use crate::rhs::{Event, EventDirection, EventOutcome, RhsBundle};

use super::sample_box;

/// Seed of the generated terrain in the `RandomTerrain` preset.
pub const TERRAIN_SEED: u64 = 20_200_917;
/// Upper bound on |h'(x)| for the generated terrain.
pub const TERRAIN_MAX_SLOPE: f64 = 0.5;

#[derive(Clone)]
pub struct BouncingBallParams {
    pub g: f64,
    pub ground: ScalarFn,
    pub ground_slope: ScalarFn,
}

impl BouncingBallParams {
    pub fn from_parameters(p: &Parameters) -> Result<Self, ProblemError> {
        let bad = || ProblemError::Validation { field: "ground".into(), constraint: Constraint::ConsistentDerivative };
        let ParamValue::Function(ground) = p.value("ground")? else {
            return Err(bad());
        };
        Ok(Self {
            g: p.scalar("g")?,
            ground: ground.scalar_fn().ok_or_else(bad)?,
            ground_slope: ground.derivative_fn().ok_or_else(bad)?,
        })
    }
}

pub fn rhs(g: f64, y: &[f64], dy: &mut [f64]) {
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = 0.0;
    dy[3] = -g;
}

/// Height of the ball above the ground.
pub fn event_value(p: &BouncingBallParams, y: &[f64]) -> f64 {
    y[1] - (p.ground)(y[0])
}

/// Reflects `(vx, vy)` across the line of slope `s`.
pub fn reflect_velocity(s: f64, vx: f64, vy: f64) -> Result<(f64, f64), ProblemError> {
    if !s.is_finite() {
        return Err(ProblemError::EventOnVerticalWall(s));
    }
    let s2 = s * s;
    let d = 1.0 + s2;
    Ok((((1.0 - s2) * vx + 2.0 * s * vy) / d, (2.0 * s * vx - (1.0 - s2) * vy) / d))
}

/// Post-bounce state: position unchanged, velocity reflected.
pub fn reflect(p: &BouncingBallParams, y: &[f64]) -> Result<Vec<f64>, ProblemError> {
    let s = (p.ground_slope)(y[0]);
    let (vx, vy) = reflect_velocity(s, y[2], y[3])?;
    Ok(vec![y[0], y[1], vx, vy])
}

pub fn schema() -> ParameterSchema {
    use Constraint::*;
    ParameterSchema::new()
        .field("g", &[Scalar, Finite, Nonnegative], "gravitational acceleration")
        .field("ground", &[Function, ConsistentDerivative], "ground height h(x) with slope h'(x)")
}

fn build(params: &Parameters) -> Result<RhsBundle, ProblemError> {
    let p = BouncingBallParams::from_parameters(params)?;
    let g = p.g;
    let (pv, pt) = (p.clone(), p);
    let event = Event {
        value: std::sync::Arc::new(move |_, y| event_value(&pv, y)),
        direction: EventDirection::Falling,
        transform: std::sync::Arc::new(move |_, y| Ok(EventOutcome { state: reflect(&pt, y)?, terminal: false })),
    };
    let mut jac = DMatrix::zeros(4, 4);
    jac[(0, 2)] = 1.0;
    jac[(1, 3)] = 1.0;
    Ok(RhsBundle::infallible(4, move |_, y, dy| rhs(g, y, dy))
        .with_jacobian(move |_, _| Ok(jac.clone()))
        .with_products_from_jacobian()
        .with_event(event))
}

/// Position in [-5, 5] x [0, 5], velocity in [-5, 5]^2.
fn sample(_: &Problem, rng: &mut dyn RngCore) -> Vec<f64> {
    sample_box(rng, &[(-5.0, 5.0), (0.0, 5.0), (-5.0, 5.0), (-5.0, 5.0)])
}

pub fn flat_ground() -> FunctionParam {
    FunctionParam::differentiable("0", |_| 0.0, |_| 0.0)
}

/// A sum of five sinusoids drawn from a fixed seed and scaled so that
/// `Σ |a_i ω_i| = TERRAIN_MAX_SLOPE`, which bounds the slope everywhere.
pub fn random_terrain(seed: u64) -> FunctionParam {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes: Vec<(f64, f64, f64)> = (0..5)
        .map(|_| (rng.gen_range(0.2..1.0), rng.gen_range(0.5..3.0), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let total: f64 = modes.iter().map(|(a, w, _)| a * w).sum();
    for m in &mut modes {
        m.0 *= TERRAIN_MAX_SLOPE / total;
    }
    let value_modes = modes.clone();
    FunctionParam::differentiable(
        format!("random sinusoidal terrain (seed {seed})"),
        move |x| value_modes.iter().map(|(a, w, phi)| a * (w * x + phi).sin()).sum(),
        move |x| modes.iter().map(|(a, w, phi)| a * w * (w * x + phi).cos()).sum(),
    )
}

fn canonical() -> PresetDefaults {
    let params = Parameters::new().with("g", ParamValue::Scalar(9.8)).with("ground", ParamValue::Function(flat_ground()));
    PresetDefaults::new(params, (0.0, 10.0), |_| Ok(vec![0.0, 1.0, 0.0, 0.0]))
}

fn random_terrain_preset() -> PresetDefaults {
    let params = Parameters::new()
        .with("g", ParamValue::Scalar(9.8))
        .with("ground", ParamValue::Function(random_terrain(TERRAIN_SEED)));
    PresetDefaults::new(params, (0.0, 10.0), |_| Ok(vec![0.0, 2.0, 1.0, 0.0]))
}

pub(crate) static FAMILY: Family = Family {
    name: "bouncingball",
    title: "Bouncing Ball",
    size_label: "4",
    description: "ball in free flight bouncing elastically off a differentiable ground (event problem)",
    schema,
    build,
    sample_state: sample,
    presets: &[
        Preset { name: "Canonical", description: "flat ground, g=9.8, dropped from height 1, t in [0,10]", defaults: canonical },
        Preset {
            name: "RandomTerrain",
            description: "seeded sum of 5 sinusoids with |h'| <= 0.5, y0=(0,2,1,0), t in [0,10]",
            defaults: random_terrain_preset,
        },
    ],
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_ground_reflection() {
        assert_eq!(reflect_velocity(0.0, 1.0, -1.0).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn slope_one_reflection() {
        let (vx, vy) = reflect_velocity(1.0, 0.0, -1.0).unwrap();
        assert_eq!((vx, vy), (-1.0, 0.0));
    }

    #[test]
    fn reflection_preserves_speed_and_is_involution() {
        for &s in &[-3.0, -0.4, 0.0, 0.25, 1.0, 7.5] {
            let (vx, vy) = (0.3, -2.1);
            let (a, b) = reflect_velocity(s, vx, vy).unwrap();
            assert!(((a * a + b * b).sqrt() - (vx * vx + vy * vy).sqrt()).abs() < 1e-14);
            let (c, d) = reflect_velocity(s, a, b).unwrap();
            assert!((c - vx).abs() < 1e-14 && (d - vy).abs() < 1e-14);
        }
    }

    #[test]
    fn vertical_wall_is_an_error() {
        assert!(matches!(reflect_velocity(f64::INFINITY, 0.0, -1.0), Err(ProblemError::EventOnVerticalWall(_))));
    }

    #[test]
    fn terrain_slope_is_bounded_and_deterministic() {
        let a = random_terrain(TERRAIN_SEED);
        let b = random_terrain(TERRAIN_SEED);
        let (da, db) = (a.derivative_fn().unwrap(), b.derivative_fn().unwrap());
        for k in 0..2000 {
            let x = -50.0 + 0.05 * k as f64;
            assert!(da(x).abs() <= TERRAIN_MAX_SLOPE + 1e-12);
            assert_eq!(da(x).to_bits(), db(x).to_bits());
        }
        assert!(Constraint::ConsistentDerivative.check(&ParamValue::Function(a)));
    }

    #[test]
    fn inconsistent_ground_is_rejected() {
        let bad = FunctionParam::differentiable("x^2", |x| x * x, |_| 1.0);
        let o = Parameters::new().with("ground", ParamValue::Function(bad));
        let err = crate::registry::build_preset("bouncingball", "Canonical", &o).unwrap_err();
        assert_eq!(err.to_string(), "The field ground does not satisfy consistent derivative");
    }

    #[test]
    fn free_flight_rhs() {
        let p = crate::registry::canonical("bouncingball").unwrap();
        assert_eq!(p.f(0.0, &[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![3.0, 4.0, 0.0, -9.8]);
        let ev = p.rhs().event().unwrap();
        assert_eq!((ev.value)(0.0, p.y0()), 1.0);
    }
}
