//! Problem families and their presets.

use std::fmt;

use rand::RngCore;

use crate::error::ProblemError;
use crate::params::{ParameterSchema, Parameters};
use crate::problem::Problem;
use crate::problems;
use crate::rhs::RhsBundle;

pub type InitialState = Box<dyn Fn(&Parameters) -> Result<Vec<f64>, ProblemError>>;

/// Everything a preset contributes before overrides are applied.
pub struct PresetDefaults {
    pub params: Parameters,
    pub time_span: (f64, f64),
    /// Initial state, computed from the final (overridden) parameters.
    pub y0: InitialState,
}

impl PresetDefaults {
    pub fn new(
        params: Parameters,
        time_span: (f64, f64),
        y0: impl Fn(&Parameters) -> Result<Vec<f64>, ProblemError> + 'static,
    ) -> Self {
        Self { params, time_span, y0: Box::new(y0) }
    }
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub defaults: fn() -> PresetDefaults,
}

/// A registered problem family.
pub struct Family {
    pub name: &'static str,
    pub title: &'static str,
    /// Number of variables, e.g. `n (40)`.
    pub size_label: &'static str,
    pub description: &'static str,
    pub schema: fn() -> ParameterSchema,
    pub build: fn(&Parameters) -> Result<RhsBundle, ProblemError>,
    /// Draws a state from the family's Jacobian-check sampling box.
    pub sample_state: fn(&Problem, &mut dyn RngCore) -> Vec<f64>,
    pub presets: &'static [Preset],
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Family").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Family {
    pub fn preset(&self, name: &str) -> Option<&'static Preset> {
        self.presets.iter().find(|p| p.name == name)
    }
}

static FAMILIES: [&Family; 10] = [
    &problems::linear::FAMILY,
    &problems::bouncingball::FAMILY,
    &problems::brusselator::FAMILY,
    &problems::doublependulum::FAMILY,
    &problems::hires::FAMILY,
    &problems::lorenz63::FAMILY,
    &problems::lorenz96::FAMILY,
    &problems::qgso::FAMILY,
    &problems::grayscott::FAMILY,
    &problems::bpe::FAMILY,
];

pub fn families() -> &'static [&'static Family] {
    &FAMILIES
}

pub fn family(name: &str) -> Result<&'static Family, ProblemError> {
    FAMILIES
        .iter()
        .copied()
        .find(|f| f.name == name)
        .ok_or_else(|| ProblemError::UnknownFamily(name.to_string()))
}

/// Builds a fully validated problem from a registered preset. Overrides
/// replace preset defaults before validation.
pub fn build_preset(family_name: &str, preset_name: &str, overrides: &Parameters) -> Result<Problem, ProblemError> {
    let family = family(family_name)?;
    let preset = family.preset(preset_name).ok_or_else(|| ProblemError::UnknownPreset {
        family: family_name.to_string(),
        preset: preset_name.to_string(),
    })?;
    let schema = (family.schema)();
    let defaults = (preset.defaults)();
    let mut params = defaults.params;
    for (name, value) in overrides.iter() {
        schema.check_field(name, value)?;
        params.insert(name, value.clone());
    }
    let y0 = (defaults.y0)(&params)?;
    Problem::assemble(family, preset.name, params, defaults.time_span, y0)
}

/// Shorthand for `build_preset(family, "Canonical", {})`.
pub fn canonical(family_name: &str) -> Result<Problem, ProblemError> {
    build_preset(family_name, "Canonical", &Parameters::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamValue;

    #[test]
    fn every_family_has_a_canonical_preset_that_builds() {
        for family in families() {
            assert!(family.preset("Canonical").is_some(), "{} lacks Canonical", family.name);
        }
        // the PDE canonicals are large; build the small ones here
        for name in ["linear", "bouncingball", "brusselator", "doublependulum", "hires", "lorenz63", "lorenz96", "bpe"] {
            let p = canonical(name).unwrap();
            assert_eq!(p.y0().len(), p.num_vars());
        }
    }

    #[test]
    fn all_presets_build_without_overrides() {
        for family in families() {
            for preset in family.presets {
                if matches!((family.name, preset.name), ("qgso", _) | ("grayscott", _)) {
                    continue;
                }
                build_preset(family.name, preset.name, &Parameters::new())
                    .unwrap_or_else(|e| panic!("{}/{}: {e}", family.name, preset.name));
            }
        }
    }

    #[test]
    fn unknown_names() {
        assert_eq!(canonical("nosuch").unwrap_err(), ProblemError::UnknownFamily("nosuch".into()));
        assert!(matches!(
            build_preset("lorenz63", "Nope", &Parameters::new()),
            Err(ProblemError::UnknownPreset { .. })
        ));
        let bad = Parameters::new().with("gamma", ParamValue::Scalar(1.0));
        assert_eq!(
            build_preset("lorenz63", "Canonical", &bad).unwrap_err(),
            ProblemError::UnknownField("gamma".into())
        );
    }

    #[test]
    fn lorenz96_canonical_has_forty_variables() {
        assert_eq!(canonical("lorenz96").unwrap().num_vars(), 40);
    }

    #[test]
    fn validation_errors_from_overrides() {
        let neg = Parameters::new().with("rho", ParamValue::Scalar(-1.0));
        let err = build_preset("lorenz63", "Canonical", &neg).unwrap_err();
        assert_eq!(err.to_string(), "The field rho does not satisfy nonnegative");
        let vec = Parameters::new().with("rho", ParamValue::Vector(vec![1.0, 1.0]));
        let err = build_preset("lorenz63", "Canonical", &vec).unwrap_err();
        assert_eq!(err.to_string(), "The field rho does not satisfy scalar");
    }

    #[test]
    fn mutation_is_validated_and_atomic() {
        let mut p = canonical("lorenz63").unwrap();
        let before = p.f(0.0, p.y0()).unwrap();
        let err = p.set_parameter("rho", ParamValue::Vector(vec![1.0, 1.0])).unwrap_err();
        assert_eq!(err.to_string(), "The field rho does not satisfy scalar");
        assert!(matches!(p.parameters().get("rho"), Some(ParamValue::Scalar(x)) if *x == 28.0));

        let sigma = p.parameters().scalar("sigma").unwrap();
        let pert = (f64::EPSILON * sigma).sqrt();
        p.set_parameter("sigma", ParamValue::Scalar(sigma + pert)).unwrap();
        assert_ne!(p.f(0.0, p.y0()).unwrap(), before);
    }

    #[test]
    fn preset_determinism() {
        use rand::{Rng, SeedableRng};
        for name in ["lorenz63", "lorenz96", "hires", "brusselator", "bouncingball", "doublependulum", "bpe"] {
            let a = canonical(name).unwrap();
            let b = canonical(name).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            for _ in 0..100 {
                let y = a.sample_state(&mut rng);
                let t: f64 = rng.gen_range(0.0..1.0);
                let fa = a.f(t, &y).unwrap();
                let fb = b.f(t, &y).unwrap();
                assert!(fa.iter().zip(&fb).all(|(x, y)| x.to_bits() == y.to_bits()), "{name}");
            }
        }
    }
}
