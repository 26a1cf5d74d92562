//! HIRES: the eight-species plant-physiology kinetics problem (mildly stiff).
//!
//! Canonical: `y0 = (1, 0, 0, 0, 0, 0, 0, 0.0057)`, `t ∈ [0, 321.8122]`.
//! `y7 + y8` is a first integral.

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::ProblemError;
use crate::params::{ParameterSchema, Parameters};
use crate::problem::Problem;
use crate::registry::{Family, Preset, PresetDefaults};
use crate::rhs::RhsBundle;

use super::sample_box;

pub const Y0: [f64; 8] = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0057];
pub const T_END: f64 = 321.8122;

pub fn rhs(y: &[f64], dy: &mut [f64]) {
    dy[0] = -1.71 * y[0] + 0.43 * y[1] + 8.32 * y[2] + 0.0007;
    dy[1] = 1.71 * y[0] - 8.75 * y[1];
    dy[2] = -10.03 * y[2] + 0.43 * y[3] + 0.035 * y[4];
    dy[3] = 8.32 * y[1] + 1.71 * y[2] - 1.12 * y[3];
    dy[4] = -1.745 * y[4] + 0.43 * y[5] + 0.43 * y[6];
    dy[5] = -280.0 * y[5] * y[7] + 0.69 * y[3] + 1.71 * y[4] - 0.43 * y[5] + 0.69 * y[6];
    dy[6] = 280.0 * y[5] * y[7] - 1.81 * y[6];
    dy[7] = -280.0 * y[5] * y[7] + 1.81 * y[6];
}

pub fn jacobian(y: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(8, 8);
    j[(0, 0)] = -1.71;
    j[(0, 1)] = 0.43;
    j[(0, 2)] = 8.32;
    j[(1, 0)] = 1.71;
    j[(1, 1)] = -8.75;
    j[(2, 2)] = -10.03;
    j[(2, 3)] = 0.43;
    j[(2, 4)] = 0.035;
    j[(3, 1)] = 8.32;
    j[(3, 2)] = 1.71;
    j[(3, 3)] = -1.12;
    j[(4, 4)] = -1.745;
    j[(4, 5)] = 0.43;
    j[(4, 6)] = 0.43;
    j[(5, 3)] = 0.69;
    j[(5, 4)] = 1.71;
    j[(5, 5)] = -280.0 * y[7] - 0.43;
    j[(5, 6)] = 0.69;
    j[(5, 7)] = -280.0 * y[5];
    j[(6, 5)] = 280.0 * y[7];
    j[(6, 6)] = -1.81;
    j[(6, 7)] = 280.0 * y[5];
    j[(7, 5)] = -280.0 * y[7];
    j[(7, 6)] = 1.81;
    j[(7, 7)] = -280.0 * y[5];
    j
}

fn schema() -> ParameterSchema {
    ParameterSchema::new()
}

fn build(_: &Parameters) -> Result<RhsBundle, ProblemError> {
    Ok(RhsBundle::infallible(8, |_, y, dy| rhs(y, dy))
        .with_jacobian(|_, y| Ok(jacobian(y)))
        .with_products_from_jacobian())
}

/// Concentrations in [0, 1]⁷ × [0, 0.01].
fn sample(_: &Problem, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut bounds = vec![(0.0, 1.0); 7];
    bounds.push((0.0, 0.01));
    sample_box(rng, &bounds)
}

fn canonical() -> PresetDefaults {
    PresetDefaults::new(Parameters::new(), (0.0, T_END), |_| Ok(Y0.to_vec()))
}

pub(crate) static FAMILY: Family = Family {
    name: "hires",
    title: "HIRES",
    size_label: "8",
    description: "high irradiance response kinetics, mildly stiff",
    schema,
    build,
    sample_state: sample,
    presets: &[Preset {
        name: "Canonical",
        description: "y0=(1,0,0,0,0,0,0,0.0057), t in [0,321.8122]",
        defaults: canonical,
    }],
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_y0() {
        let mut f = [0.0; 8];
        rhs(&Y0, &mut f);
        assert!((f[0] - -1.7093).abs() < 1e-15);
        assert_eq!(f[1], 1.71);
        assert_eq!(f[7], 0.0);
    }

    #[test]
    fn y7_plus_y8_is_a_first_integral() {
        let mut f = [0.0; 8];
        for k in 0..20 {
            let y: Vec<f64> = (0..8).map(|i| ((k * 8 + i) as f64 * 0.37).sin().abs()).collect();
            rhs(&y, &mut f);
            assert!((f[6] + f[7]).abs() <= 1e-15 * (280.0 * y[5] * y[7] + 1.81 * y[6]).max(1.0));
        }
        assert_eq!(Y0[6] + Y0[7], 0.0057);
    }
}
