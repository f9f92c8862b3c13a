//! Curvature profiles: the function k(r) with sec = -k(r), pinched between
//! a^2 and b^2.
//!
//! Each profile kind lives behind the [`CurvatureFn`] trait and is registered
//! by name, so models are assembled at runtime from JSON configuration.

use std::collections::BTreeMap;
use std::sync::Arc;

use once_cell::sync::Lazy;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// A curvature magnitude profile r -> k(r) on [0, infinity).
///
/// Implementations must be continuous; kinds with kinks report them through
/// `breakpoints` so integrators can align steps with them.
pub trait CurvatureFn: Send + Sync {
    fn kind(&self) -> &'static str;
    fn eval(&self, r: f64) -> f64;
    /// Locations where the profile is not smooth, in increasing order.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

pub struct ConstantCurvature {
    pub value: f64,
}

impl CurvatureFn for ConstantCurvature {
    fn kind(&self) -> &'static str {
        "constant"
    }
    fn eval(&self, _r: f64) -> f64 {
        self.value
    }
}

pub struct CosineCurvature {
    pub mean: f64,
    pub amplitude: f64,
    pub frequency: f64,
}

impl CurvatureFn for CosineCurvature {
    fn kind(&self) -> &'static str {
        "cosine"
    }
    fn eval(&self, r: f64) -> f64 {
        self.mean + self.amplitude * (self.frequency * r).cos()
    }
}

/// Continuous piecewise-linear profile through `(breakpoints[i], values[i])`,
/// clamped to the end values outside the breakpoint range.
pub struct PiecewiseCurvature {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseCurvature {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() || breakpoints.len() < 2 {
            return Err(Error::ConfigParse(
                "piecewise profile needs matching breakpoints/values with at least two nodes"
                    .into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ConfigParse(
                "piecewise breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(PiecewiseCurvature {
            breakpoints,
            values,
        })
    }
}

impl CurvatureFn for PiecewiseCurvature {
    fn kind(&self) -> &'static str {
        "piecewise"
    }
    fn eval(&self, r: f64) -> f64 {
        let bp = &self.breakpoints;
        if r <= bp[0] {
            return self.values[0];
        }
        if r >= bp[bp.len() - 1] {
            return self.values[bp.len() - 1];
        }
        let i = bp.partition_point(|&x| x <= r) - 1;
        let w = (r - bp[i]) / (bp[i + 1] - bp[i]);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

type ProfileCtor = fn(&Value) -> Result<Arc<dyn CurvatureFn>>;

fn constant_ctor(v: &Value) -> Result<Arc<dyn CurvatureFn>> {
    #[derive(Deserialize)]
    struct P {
        value: f64,
    }
    let p: P = serde_json::from_value(v.clone())?;
    Ok(Arc::new(ConstantCurvature { value: p.value }))
}

fn cosine_ctor(v: &Value) -> Result<Arc<dyn CurvatureFn>> {
    #[derive(Deserialize)]
    struct P {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
    }
    fn one() -> f64 {
        1.0
    }
    let p: P = serde_json::from_value(v.clone())?;
    Ok(Arc::new(CosineCurvature {
        mean: p.mean,
        amplitude: p.amplitude,
        frequency: p.frequency,
    }))
}

fn piecewise_ctor(v: &Value) -> Result<Arc<dyn CurvatureFn>> {
    #[derive(Deserialize)]
    struct P {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    }
    let p: P = serde_json::from_value(v.clone())?;
    Ok(Arc::new(PiecewiseCurvature::new(p.breakpoints, p.values)?))
}

static PROFILE_REGISTRY: Lazy<BTreeMap<&'static str, ProfileCtor>> = Lazy::new(|| {
    let mut m: BTreeMap<&'static str, ProfileCtor> = BTreeMap::new();
    m.insert("constant", constant_ctor);
    m.insert("cosine", cosine_ctor);
    m.insert("piecewise", piecewise_ctor);
    m
});

pub fn registered_profile_kinds() -> Vec<&'static str> {
    PROFILE_REGISTRY.keys().copied().collect()
}

/// Build a curvature function from its JSON description, e.g.
/// `{"kind": "cosine", "mean": 2.125, "amplitude": 1.875, "frequency": 1.0}`.
pub fn curvature_from_json(v: &Value) -> Result<Arc<dyn CurvatureFn>> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::ConfigParse("profile is missing a string \"kind\"".into()))?;
    let ctor = PROFILE_REGISTRY.get(kind).ok_or_else(|| {
        Error::ConfigParse(format!(
            "unknown profile kind {kind:?}; registered kinds: {:?}",
            registered_profile_kinds()
        ))
    })?;
    ctor(v)
}

/// The curvature data (a, b, k) driving every comparison bound:
/// sec = -k(r) with a^2 <= k <= b^2 and 0 < a <= 1 <= b.
#[derive(Clone)]
pub struct PinchingProfile {
    pub a: f64,
    pub b: f64,
    k: Arc<dyn CurvatureFn>,
}

impl PinchingProfile {
    pub fn new(a: f64, b: f64, k: Arc<dyn CurvatureFn>) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0 && b >= 1.0 && a <= b) {
            return Err(Error::InvalidInput(format!(
                "pinching constants must satisfy 0 < a <= 1 <= b (got a = {a}, b = {b})"
            )));
        }
        Ok(PinchingProfile { a, b, k })
    }

    pub fn constant(a: f64, b: f64, value: f64) -> Result<Self> {
        Self::new(a, b, Arc::new(ConstantCurvature { value }))
    }

    pub fn k(&self, r: f64) -> f64 {
        self.k.eval(r)
    }

    pub fn kind(&self) -> &'static str {
        self.k.kind()
    }

    /// Pinching ratio alpha = a/b, the Holder exponent of the compactification.
    pub fn alpha(&self) -> f64 {
        self.a / self.b
    }

    /// Breakpoints of k inside (lo, hi), for step alignment.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.k
            .breakpoints()
            .into_iter()
            .filter(|&r| r > lo && r < hi)
            .collect()
    }

    /// Sampled check that a^2 <= k(r) <= b^2 on [0, r_max].
    pub fn validate_pinching(&self, r_max: f64, n: usize) -> Result<()> {
        let lo = self.a * self.a;
        let hi = self.b * self.b;
        let tol = 1e-12 * hi.max(1.0);
        for i in 0..=n {
            let r = r_max * i as f64 / n as f64;
            let k = self.k(r);
            if !(k >= lo - tol && k <= hi + tol) {
                return Err(Error::PinchingViolation { r, k, lo, hi });
            }
        }
        Ok(())
    }
}

/// JSON document describing a full model:
/// `{"a":…, "b":…, "profile":{…}, "f0":…, "f0_prime":…, "r_max":…}`.
#[derive(Clone, Debug, Deserialize)]
pub struct ModelConfig {
    pub a: f64,
    pub b: f64,
    pub profile: Value,
    pub f0: f64,
    #[serde(default)]
    pub f0_prime: f64,
    pub r_max: f64,
}

impl ModelConfig {
    pub fn from_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    pub fn pinching_profile(&self) -> Result<PinchingProfile> {
        PinchingProfile::new(self.a, self.b, curvature_from_json(&self.profile)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn registry_lists_all_kinds() {
        assert_eq!(
            registered_profile_kinds(),
            vec!["constant", "cosine", "piecewise"]
        );
    }

    #[test]
    fn cosine_profile_from_json() {
        let k = curvature_from_json(&json!({
            "kind": "cosine", "mean": 2.125, "amplitude": 1.875, "frequency": 1.0
        }))
        .unwrap();
        assert!((k.eval(0.0) - 4.0).abs() < 1e-15);
        assert!((k.eval(std::f64::consts::PI) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn piecewise_is_continuous_and_clamped() {
        let k = curvature_from_json(&json!({
            "kind": "piecewise", "breakpoints": [0.0, 2.0, 4.0], "values": [1.0, 0.64, 1.5625]
        }))
        .unwrap();
        assert_eq!(k.eval(-1.0), 1.0);
        assert_eq!(k.eval(10.0), 1.5625);
        assert!((k.eval(1.0) - 0.82).abs() < 1e-15);
        // continuity across a breakpoint
        assert!((k.eval(2.0 - 1e-12) - k.eval(2.0 + 1e-12)).abs() < 1e-9);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(curvature_from_json(&json!({"kind": "quintic"})).is_err());
    }

    #[test]
    fn pinching_validation_flags_excursion() {
        let p = PinchingProfile::constant(0.5, 1.0, 2.0).unwrap();
        assert!(matches!(
            p.validate_pinching(10.0, 100),
            Err(Error::PinchingViolation { .. })
        ));
        let good = PinchingProfile::constant(0.5, 2.0, 2.0).unwrap();
        assert!(good.validate_pinching(10.0, 100).is_ok());
    }

    #[test]
    fn normalization_is_enforced() {
        assert!(PinchingProfile::constant(1.5, 2.0, 1.0).is_err());
        assert!(PinchingProfile::constant(0.5, 0.9, 1.0).is_err());
        assert!(PinchingProfile::constant(-0.5, 2.0, 1.0).is_err());
    }

    #[test]
    fn model_config_parses_the_documented_schema() {
        let cfg = ModelConfig::from_str(
            r#"{"a": 0.5, "b": 2.0,
                "profile": {"kind": "cosine", "mean": 2.125, "amplitude": 1.875, "frequency": 1.0},
                "f0": 1.0, "f0_prime": 0.0, "r_max": 30.0}"#,
        )
        .unwrap();
        assert_eq!(cfg.r_max, 30.0);
        let p = cfg.pinching_profile().unwrap();
        assert!(p.validate_pinching(30.0, 1000).is_ok());
    }
}
