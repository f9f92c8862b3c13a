//! Boundaries of second essential subsets: graph hypersurfaces {r = rho(theta)}
//! over the core circle, with height functions behind a registry, convexity
//! checking, and induced arclength.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use once_cell::sync::Lazy;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::warp::WarpedModel;

/// A periodic graph height theta -> rho(theta) >= 0 with two derivatives.
pub trait HeightFn: Send + Sync {
    fn kind(&self) -> &'static str;
    fn eval(&self, theta: f64) -> f64;
    fn d1(&self, theta: f64) -> f64;
    fn d2(&self, theta: f64) -> f64;
}

pub struct ConstantHeight {
    pub value: f64,
}

impl HeightFn for ConstantHeight {
    fn kind(&self) -> &'static str {
        "constant"
    }
    fn eval(&self, _theta: f64) -> f64 {
        self.value
    }
    fn d1(&self, _theta: f64) -> f64 {
        0.0
    }
    fn d2(&self, _theta: f64) -> f64 {
        0.0
    }
}

/// rho(theta) = mean + sum_k (a_k cos(k theta) + b_k sin(k theta)).
pub struct FourierHeight {
    pub mean: f64,
    /// (harmonic, cosine coefficient, sine coefficient)
    pub coeffs: Vec<(u32, f64, f64)>,
}

impl HeightFn for FourierHeight {
    fn kind(&self) -> &'static str {
        "fourier"
    }
    fn eval(&self, theta: f64) -> f64 {
        self.mean
            + self
                .coeffs
                .iter()
                .map(|&(k, a, b)| {
                    let kt = k as f64 * theta;
                    a * kt.cos() + b * kt.sin()
                })
                .sum::<f64>()
    }
    fn d1(&self, theta: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|&(k, a, b)| {
                let kf = k as f64;
                let kt = kf * theta;
                -a * kf * kt.sin() + b * kf * kt.cos()
            })
            .sum()
    }
    fn d2(&self, theta: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|&(k, a, b)| {
                let kf = k as f64;
                let kt = kf * theta;
                -kf * kf * (a * kt.cos() + b * kt.sin())
            })
            .sum()
    }
}

type HeightCtor = fn(&Value) -> Result<Arc<dyn HeightFn>>;

fn constant_height_ctor(v: &Value) -> Result<Arc<dyn HeightFn>> {
    #[derive(Deserialize)]
    struct P {
        value: f64,
    }
    let p: P = serde_json::from_value(v.clone())?;
    Ok(Arc::new(ConstantHeight { value: p.value }))
}

fn fourier_height_ctor(v: &Value) -> Result<Arc<dyn HeightFn>> {
    #[derive(Deserialize)]
    struct P {
        mean: f64,
        #[serde(default)]
        coeffs: Vec<(f64, f64, f64)>,
    }
    let p: P = serde_json::from_value(v.clone())?;
    let coeffs = p
        .coeffs
        .into_iter()
        .map(|(k, a, b)| {
            if k < 0.0 || k.fract() != 0.0 {
                return Err(Error::ConfigParse(format!(
                    "fourier harmonic index must be a nonnegative integer, got {k}"
                )));
            }
            Ok((k as u32, a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(FourierHeight {
        mean: p.mean,
        coeffs,
    }))
}

static HEIGHT_REGISTRY: Lazy<BTreeMap<&'static str, HeightCtor>> = Lazy::new(|| {
    let mut m: BTreeMap<&'static str, HeightCtor> = BTreeMap::new();
    m.insert("constant", constant_height_ctor);
    m.insert("fourier", fourier_height_ctor);
    m
});

pub fn registered_height_kinds() -> Vec<&'static str> {
    HEIGHT_REGISTRY.keys().copied().collect()
}

pub fn height_from_json(v: &Value) -> Result<Arc<dyn HeightFn>> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::ConfigParse("rho is missing a string \"kind\"".into()))?;
    let ctor = HEIGHT_REGISTRY.get(kind).ok_or_else(|| {
        Error::ConfigParse(format!(
            "unknown rho kind {kind:?}; registered kinds: {:?}",
            registered_height_kinds()
        ))
    })?;
    ctor(v)
}

/// JSON document for a second-subset boundary:
/// `{"rho": {"kind": "fourier", "mean": 3.0, "coeffs": [[1, 0.5, 0.0]]}}`.
#[derive(Clone, Debug, Deserialize)]
pub struct SubsetConfig {
    pub rho: Value,
}

impl SubsetConfig {
    pub fn from_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    pub fn boundary(&self) -> Result<EssentialSubsetBoundary> {
        EssentialSubsetBoundary::new(height_from_json(&self.rho)?)
    }
}

const N_SAMPLES: usize = 2048;

/// Boundary of a second essential subset as a graph over the core circle.
/// rho == const encodes a concentric circle; the base subset itself is
/// rho == 0.
pub struct EssentialSubsetBoundary {
    rho: Arc<dyn HeightFn>,
    /// Dense periodic samples (theta, rho(theta)).
    pub samples: Vec<(f64, f64)>,
}

impl EssentialSubsetBoundary {
    pub fn new(rho: Arc<dyn HeightFn>) -> Result<Self> {
        let samples = (0..N_SAMPLES)
            .map(|i| {
                let theta = TAU * i as f64 / N_SAMPLES as f64;
                (theta, rho.eval(theta))
            })
            .collect();
        Ok(EssentialSubsetBoundary { rho, samples })
    }

    pub fn concentric(r: f64) -> Result<Self> {
        Self::new(Arc::new(ConstantHeight { value: r }))
    }

    pub fn rho(&self, theta: f64) -> f64 {
        self.rho.eval(theta)
    }

    pub fn rho_d1(&self, theta: f64) -> f64 {
        self.rho.d1(theta)
    }

    pub fn rho_d2(&self, theta: f64) -> f64 {
        self.rho.d2(theta)
    }

    pub fn rho_max(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn rho_min(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
    }

    /// Scalar second fundamental form of the graph at `theta` with respect
    /// to the outward unit normal; nonnegative means convex there.
    pub fn second_fundamental_form(&self, model: &WarpedModel, theta: f64) -> Result<f64> {
        let rho = self.rho(theta);
        let d1 = self.rho_d1(theta);
        let d2 = self.rho_d2(theta);
        let (f, fp) = model.warp(rho)?;
        let numerator = f * fp + 2.0 * d1 * d1 * fp / f - d2;
        let speed2 = f * f + d1 * d1;
        Ok(numerator / (speed2 * (1.0 + d1 * d1 / (f * f)).sqrt()))
    }

    /// Outward unit normal at the boundary point over `theta`, as
    /// (theta_dot, r_dot) of a unit-speed geodesic launch.
    pub fn outward_normal(&self, model: &WarpedModel, theta: f64) -> Result<(f64, f64)> {
        let rho = self.rho(theta);
        let d1 = self.rho_d1(theta);
        let (f, _) = model.warp(rho)?;
        let norm = (1.0 + d1 * d1 / (f * f)).sqrt();
        Ok((-(d1 / (f * f)) / norm, 1.0 / norm))
    }
}

/// Node-by-node convexity report for a subset boundary.
#[derive(Clone, Debug)]
pub struct ConvexityReport {
    pub convex: bool,
    /// Smallest second-fundamental-form value over the nodes.
    pub min_form: f64,
    pub worst_theta: f64,
    pub rho_nonnegative: bool,
    pub nodes_checked: usize,
}

/// Evaluate the scalar second fundamental form at every sample node.
/// Nodes with rho < 0 invalidate the subset outright.
pub fn check_convexity(
    subset: &EssentialSubsetBoundary,
    model: &WarpedModel,
) -> Result<ConvexityReport> {
    let mut min_form = f64::INFINITY;
    let mut worst_theta = 0.0;
    let mut rho_nonnegative = true;
    for &(theta, rho) in &subset.samples {
        if rho < 0.0 {
            rho_nonnegative = false;
            worst_theta = theta;
            continue;
        }
        if rho > model.r_max {
            return Err(Error::OutOfHorizon {
                r: rho,
                r_max: model.r_max,
            });
        }
        let h = subset.second_fundamental_form(model, theta)?;
        if h < min_form {
            min_form = h;
            worst_theta = theta;
        }
    }
    let convex = rho_nonnegative && min_form >= -1e-9;
    Ok(ConvexityReport {
        convex,
        min_form,
        worst_theta,
        rho_nonnegative,
        nodes_checked: subset.samples.len(),
    })
}

/// Like [`check_convexity`] but turns a failed check into an error carrying
/// the worst node.
pub fn require_convex(subset: &EssentialSubsetBoundary, model: &WarpedModel) -> Result<ConvexityReport> {
    let report = check_convexity(subset, model)?;
    if !report.convex {
        return Err(Error::NonconvexBoundary {
            theta: report.worst_theta,
            value: if report.rho_nonnegative {
                report.min_form
            } else {
                f64::NAN
            },
        });
    }
    Ok(report)
}

const ARCLEN_GRID: usize = 16_384;

/// Induced-arclength data for a subset boundary in a fixed model: cumulative
/// length, total circumference, and the intrinsic circle distance on Y2.
pub struct BoundaryArclength {
    cum: Vec<f64>,
    pub total: f64,
}

impl BoundaryArclength {
    pub fn build(subset: &EssentialSubsetBoundary, model: &WarpedModel) -> Result<Self> {
        // composite Simpson on a uniform grid; integrand sqrt(rho'^2 + f(rho)^2)
        let n = ARCLEN_GRID;
        let h = TAU / n as f64;
        let w = |theta: f64| -> Result<f64> {
            let d1 = subset.rho_d1(theta);
            let (f, _) = model.warp(subset.rho(theta))?;
            Ok((d1 * d1 + f * f).sqrt())
        };
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        let mut w_left = w(0.0)?;
        for i in 0..n {
            let mid = w((i as f64 + 0.5) * h)?;
            let right = w((i + 1) as f64 * h)?;
            acc += h / 6.0 * (w_left + 4.0 * mid + right);
            cum.push(acc);
            w_left = right;
        }
        let total = acc;
        Ok(BoundaryArclength { cum, total })
    }

    /// Cumulative arclength from theta = 0, by local quadratic interpolation.
    pub fn at(&self, theta: f64) -> f64 {
        let n = self.cum.len() - 1;
        let wraps = (theta / TAU).floor();
        let frac = theta - wraps * TAU;
        let x = frac / TAU * n as f64;
        let i = (x as usize).min(n - 1);
        let t = x - i as f64;
        // quadratic through cum[i-1], cum[i], cum[i+1] handles the smooth
        // integrand well below 1e-9
        let (ym, y0, yp) = if i == 0 {
            (self.cum[n - 1] - self.total, self.cum[0], self.cum[1])
        } else {
            (self.cum[i - 1], self.cum[i], self.cum[i + 1])
        };
        let interp = y0 + t * (yp - y0) + 0.5 * t * (t - 1.0) * (yp - 2.0 * y0 + ym);
        interp + wraps * self.total
    }

    /// Intrinsic circle distance on the boundary between two parameter
    /// angles.
    pub fn d_y(&self, theta1: f64, theta2: f64) -> f64 {
        let d = (self.at(theta1) - self.at(theta2)).rem_euclid(self.total);
        d.min(self.total - d)
    }
}
