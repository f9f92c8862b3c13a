//! Comparison-geometry constants and bounds: shape-operator and metric
//! envelopes, the hyperbolic metric sandwich, the hyperbolic law of cosines,
//! and the chart-scale distance bounds with fitted constants.
//!
//! Constants that the theory only asserts to exist are computed as the
//! minimal constant certifying their inequality over a dense validation
//! grid, inflated by ten percent, and re-certified on an independent finer
//! grid. A certification produces one [`CertRow`] per inequality.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profile::PinchingProfile;
use crate::riccati::RiccatiSolution;
use crate::warp::{FermiPoint, WarpedModel};

/// Violations are counted against this relative slack.
pub const CERT_SLACK: f64 = 1e-9;

/// One row of a certification report.
#[derive(Clone, Debug)]
pub struct CertRow {
    pub inequality_id: String,
    pub grid_size: usize,
    pub max_slack: f64,
    pub min_slack: f64,
    pub violated_count: usize,
}

impl CertRow {
    fn from_slacks(id: &str, slacks: impl Iterator<Item = f64>) -> Self {
        let mut max_slack = f64::NEG_INFINITY;
        let mut min_slack = f64::INFINITY;
        let mut violated = 0usize;
        let mut n = 0usize;
        for s in slacks {
            max_slack = max_slack.max(s);
            min_slack = min_slack.min(s);
            if s < -CERT_SLACK {
                violated += 1;
            }
            n += 1;
        }
        CertRow {
            inequality_id: id.to_string(),
            grid_size: n,
            max_slack,
            min_slack,
            violated_count: violated,
        }
    }

    pub fn passed(&self) -> bool {
        self.violated_count == 0
    }
}

/// All derived constants of the shape-operator and metric estimates.
///
/// `shape_max`/`shape_min` are the extreme shape-operator eigenvalues on the
/// boundary Y; the primed values substitute safe defaults so that the tanh
/// and coth envelopes are always well defined. Under arclength normalization
/// of Y the metric eigenvalue extremes are omega_max = omega_min = 1.
#[derive(Clone, Copy, Debug)]
pub struct ComparisonConstants {
    pub a: f64,
    pub b: f64,
    pub shape_max: f64,
    pub shape_min: f64,
    pub shape_max_prime: f64,
    pub shape_min_prime: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub omega_max: f64,
    pub omega_min: f64,
}

/// Derive every constant from the boundary shape eigenvalue extremes.
pub fn comparison_constants(
    shape_max: f64,
    shape_min: f64,
    profile: &PinchingProfile,
) -> Result<ComparisonConstants> {
    if shape_min < 0.0 {
        return Err(Error::NonconvexBoundary {
            theta: f64::NAN,
            value: shape_min,
        });
    }
    if shape_max < shape_min {
        return Err(Error::InvalidInput(format!(
            "shape_max = {shape_max} < shape_min = {shape_min}"
        )));
    }
    let (a, b) = (profile.a, profile.b);
    let shape_max_prime = if shape_max > b { shape_max } else { 2.0 * b };
    let shape_min_prime = if shape_min < a { shape_min } else { a / 2.0 };
    let l1 = (shape_min_prime / a).atanh() / a;
    // acoth(x) = atanh(1/x) for x > 1
    let l2 = (b / shape_max_prime).atanh() / b;
    let (omega_max, omega_min) = (1.0, 1.0);
    let l3 = omega_min / (a * l1).cosh().powi(2);
    let l4 = omega_max / (b * l2).sinh().powi(2);
    Ok(ComparisonConstants {
        a,
        b,
        shape_max,
        shape_min,
        shape_max_prime,
        shape_min_prime,
        l1,
        l2,
        l3,
        l4,
        omega_max,
        omega_min,
    })
}

/// Constants for a model boundary, where the shape operator is the constant
/// f0'/f0 by rotational symmetry.
pub fn model_constants(model: &WarpedModel) -> Result<ComparisonConstants> {
    let s = model.boundary_shape_eigenvalue();
    comparison_constants(s, s, &model.profile)
}

impl ComparisonConstants {
    /// Envelope [a tanh(a(r+L1)), b coth(b(r+L2))] for shape eigenvalues.
    pub fn shape_bounds(&self, r: f64) -> (f64, f64) {
        let lo = self.a * (self.a * (r + self.l1)).tanh();
        let hi = self.b / (self.b * (r + self.l2)).tanh();
        (lo, hi)
    }

    /// Envelope [L3 cosh^2(a(r+L1)), L4 sinh^2(b(r+L2))] for the normalized
    /// metric component (f(r)/f0)^2.
    pub fn metric_bounds(&self, r: f64) -> (f64, f64) {
        let lo = self.l3 * (self.a * (r + self.l1)).cosh().powi(2);
        let hi = self.l4 * (self.b * (r + self.l2)).sinh().powi(2);
        (lo, hi)
    }
}

/// acosh(1 + u) for u >= 0, stable near u = 0 and safe from overflow of u^2.
fn acosh1p(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    (u + u * (1.0 + 2.0 / u).sqrt()).ln_1p()
}

/// Distance in the curvature -lambda^2 plane between points at radii s, t
/// from a pole subtending angle theta.
pub fn hyp_law_of_cosines(lambda: f64, s: f64, t: f64, theta: f64) -> f64 {
    debug_assert!(lambda > 0.0 && s >= 0.0 && t >= 0.0);
    let theta = theta.abs().min(PI);
    // cosh(lambda d) - 1, assembled from nonnegative terms
    let u = 2.0 * ((lambda * (s - t) / 2.0).sinh()).powi(2)
        + 2.0 * (lambda * s).sinh() * (lambda * t).sinh() * (theta / 2.0).sin().powi(2);
    acosh1p(u) / lambda
}

/// Distance from the pole to the geodesic segment joining two equal-radius
/// points: the foot of the altitude, cosh(lambda u) = cosh(lambda s) / cosh(lambda d/2).
pub fn hyp_segment_depth(lambda: f64, s: f64, theta: f64) -> f64 {
    let d = hyp_law_of_cosines(lambda, s, s, theta);
    let ratio = (lambda * s).cosh() / (lambda * d / 2.0).cosh();
    acosh1p((ratio - 1.0).max(0.0)) / lambda
}

/// The shift R making the hyperbolic comparison metrics sandwich the model:
/// sinh^2(a(r-R))/a^2 <= (f/f0)^2 <= sinh^2(b(r+R))/b^2 for all r > R.
#[derive(Clone, Copy, Debug)]
pub struct HyperbolicSandwich {
    pub r_shift: f64,
    pub valid_from: f64,
    pub a: f64,
    pub b: f64,
}

impl HyperbolicSandwich {
    /// Lower comparison distance: curvature -a^2 with legs shifted down by
    /// R. The comparison plane's polar angle is the boundary arclength.
    pub fn d_lower(&self, model: &WarpedModel, p: FermiPoint, q: FermiPoint) -> f64 {
        let dy = model.d_y(p.theta, q.theta);
        hyp_law_of_cosines(self.a, p.r - self.r_shift, q.r - self.r_shift, dy)
    }

    /// Upper comparison distance: curvature -b^2 with legs shifted up by R.
    pub fn d_upper(&self, model: &WarpedModel, p: FermiPoint, q: FermiPoint) -> f64 {
        let dy = model.d_y(p.theta, q.theta);
        hyp_law_of_cosines(self.b, p.r + self.r_shift, q.r + self.r_shift, dy)
    }

    /// Minimum r along the upper-metric geodesic between equal-radius points
    /// with boundary separation d_y.
    pub fn upper_segment_min_r(&self, s: f64, d_y: f64) -> f64 {
        hyp_segment_depth(self.b, s + self.r_shift, d_y) - self.r_shift
    }

    fn certified_on_grid(&self, model: &WarpedModel, r_shift: f64, grid: usize) -> bool {
        let (a, b) = (self.a, self.b);
        (0..=grid).all(|i| {
            let r = model.r_max * i as f64 / grid as f64;
            if r <= r_shift {
                return true;
            }
            let w = model.normalized_warp(r).unwrap_or(f64::NAN);
            let lo = (a * (r - r_shift)).sinh() / a;
            let hi = (b * (r + r_shift)).sinh() / b;
            w >= lo * (1.0 - 1e-12) && w <= hi * (1.0 + 1e-12)
        })
    }
}

/// Smallest grid-certified shift R for the hyperbolic sandwich, found by
/// bisection and certified by direct evaluation on a 10^4-point grid.
pub fn fit_hyperbolic_r(model: &WarpedModel, c: &ComparisonConstants) -> Result<HyperbolicSandwich> {
    if model.r_max < 4.0 / c.a {
        return Err(Error::InvalidInput(format!(
            "horizon r_max = {} too short to certify a sandwich (need >= {})",
            model.r_max,
            4.0 / c.a
        )));
    }
    let grid = 10_000;
    let mut sandwich = HyperbolicSandwich {
        r_shift: 0.0,
        valid_from: 0.0,
        a: c.a,
        b: c.b,
    };
    let r_hi = model.r_max / 2.0;
    if !sandwich.certified_on_grid(model, r_hi, grid) {
        return Err(Error::NoValidR { r_max: model.r_max });
    }
    let mut lo = 0.0;
    let mut hi = r_hi;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if sandwich.certified_on_grid(model, mid, grid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // small inflation so the certified shift is strictly interior
    let r_shift = hi + 1e-6;
    sandwich.r_shift = r_shift;
    sandwich.valid_from = r_shift;
    Ok(sandwich)
}

// ---------------------------------------------------------------------------
// fitted chart-scale bound constants
// ---------------------------------------------------------------------------

/// Additive constants for the two-point and segment-depth estimates in a
/// single hyperbolic plane of curvature -lambda^2, fitted over legs
/// s > 2R and certified on an independent grid.
#[derive(Clone, Copy, Debug)]
pub struct PlaneBoundConstants {
    pub lambda: f64,
    /// Legs are constrained to s > 2R with this R.
    pub r_floor: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

fn inflate(c: f64) -> f64 {
    (c + 0.1 * c.abs()).max(0.05)
}

struct PlaneGrid {
    s: Vec<f64>,
    spread: Vec<f64>,
    theta: Vec<f64>,
}

/// Log-spaced angles from pi * 1e-9 up to and including pi.
fn theta_grid(n: usize, jitter: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = ((i as f64 + jitter) / (n - 1) as f64).min(1.0);
            PI * (10f64).powf(-9.0 * (1.0 - x))
        })
        .collect()
}

/// Angles straddling the case-predicate threshold e^{lambda s} theta =
/// const, where the bound suprema live.
fn adapted_thetas(lambda: f64, s: f64) -> impl Iterator<Item = f64> {
    [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
        .into_iter()
        .map(move |c| (c * (-lambda * s).exp()).clamp(1e-300, PI))
}

fn plane_grid(r_floor: f64, n_s: usize, n_spread: usize, n_theta: usize, jitter: f64) -> PlaneGrid {
    let s_lo = 2.0 * r_floor + 1e-3;
    let s = (0..n_s)
        .map(|i| s_lo + (40.0 + jitter) * (i as f64 + jitter) / n_s as f64)
        .collect();
    let spread = (0..n_spread)
        .map(|i| (12.0 + jitter) * (i as f64 + jitter) / n_spread as f64)
        .collect();
    PlaneGrid {
        s,
        spread,
        theta: theta_grid(n_theta, jitter),
    }
}

impl PlaneBoundConstants {
    pub fn fit(lambda: f64, r_floor: f64) -> Self {
        let g = plane_grid(r_floor, 48, 32, 72, 0.0);
        let mut c1 = f64::NEG_INFINITY;
        let mut c2 = f64::NEG_INFINITY;
        let mut c3 = f64::NEG_INFINITY;
        let mut c4 = f64::NEG_INFINITY;
        let mut c5 = f64::NEG_INFINITY;
        for &s in &g.s {
            let thetas: Vec<f64> = g
                .theta
                .iter()
                .copied()
                .chain(adapted_thetas(lambda, s))
                .collect();
            for &theta in &thetas {
                for &sp in &g.spread {
                    let t = s + sp;
                    let d = hyp_law_of_cosines(lambda, s, t, theta);
                    let e = (lambda * s).exp() * theta;
                    if e >= 1.0 {
                        c1 = c1.max(d - s - t - (2.0 / lambda) * theta.ln());
                    }
                    if e <= 4.0 {
                        c2 = c2.max(d - (t - s));
                    }
                    c3 = c3.max(s + t + (2.0 / lambda) * theta.ln() - d);
                }
                let u = hyp_segment_depth(lambda, s, theta);
                let e = (lambda * s).exp() * theta;
                if e >= 1.0 {
                    c4 = c4.max(-theta.ln() / lambda - u);
                }
                if e <= 4.0 {
                    c5 = c5.max(s - u);
                }
            }
        }
        PlaneBoundConstants {
            lambda,
            r_floor,
            c1: inflate(c1),
            c2: inflate(c2),
            c3: inflate(c3),
            c4: inflate(c4),
            c5: inflate(c5),
        }
    }

    /// Re-certify every inequality on an independent, finer grid.
    pub fn certify(&self) -> Vec<CertRow> {
        let g = plane_grid(self.r_floor, 61, 47, 83, 0.37);
        let lambda = self.lambda;
        let mut rows = Vec::new();
        let mut s_far = Vec::new();
        let mut s_near = Vec::new();
        let mut s_low = Vec::new();
        let mut s_dfar = Vec::new();
        let mut s_dnear = Vec::new();
        for &s in &g.s {
            for &theta in &g.theta {
                for &sp in &g.spread {
                    let t = s + sp;
                    let d = hyp_law_of_cosines(lambda, s, t, theta);
                    let e = (lambda * s).exp() * theta;
                    if e >= 1.0 {
                        s_far.push(s + t + (2.0 / lambda) * theta.ln() + self.c1 - d);
                    }
                    if e <= 4.0 {
                        s_near.push(t - s + self.c2 - d);
                    }
                    s_low.push(d - (s + t + (2.0 / lambda) * theta.ln() - self.c3));
                }
                let u = hyp_segment_depth(lambda, s, theta);
                let e = (lambda * s).exp() * theta;
                if e >= 1.0 {
                    s_dfar.push(u - (-theta.ln() / lambda - self.c4));
                }
                if e <= 4.0 {
                    s_dnear.push(u - (s - self.c5));
                }
            }
        }
        rows.push(CertRow::from_slacks("plane_upper_far", s_far.into_iter()));
        rows.push(CertRow::from_slacks("plane_upper_near", s_near.into_iter()));
        rows.push(CertRow::from_slacks("plane_lower", s_low.into_iter()));
        rows.push(CertRow::from_slacks("plane_depth_far", s_dfar.into_iter()));
        rows.push(CertRow::from_slacks("plane_depth_near", s_dnear.into_iter()));
        rows
    }
}

/// Bounds returned by [`two_point_bounds`]; a branch is present only when
/// its case predicate holds.
#[derive(Clone, Copy, Debug)]
pub struct TwoPointBounds {
    pub upper_far: Option<f64>,
    pub upper_near: Option<f64>,
    pub lower: f64,
}

impl TwoPointBounds {
    pub fn require_far(&self) -> Result<f64> {
        self.upper_far
            .ok_or_else(|| Error::CaseInapplicable("e^{lambda s} theta >= 1 fails".into()))
    }

    pub fn require_near(&self) -> Result<f64> {
        self.upper_near
            .ok_or_else(|| Error::CaseInapplicable("e^{lambda s} theta <= 4 fails".into()))
    }
}

/// Two-point distance bounds in the hyperbolic plane, per case predicate.
pub fn two_point_bounds(k: &PlaneBoundConstants, s: f64, t: f64, theta: f64) -> Result<TwoPointBounds> {
    if !(t >= s && s > 2.0 * k.r_floor) {
        return Err(Error::InvalidInput(format!(
            "legs must satisfy t >= s > 2R (s = {s}, t = {t}, R = {})",
            k.r_floor
        )));
    }
    if !(theta > 0.0 && theta <= PI) {
        return Err(Error::InvalidInput(format!("theta = {theta} not in (0, pi]")));
    }
    let lambda = k.lambda;
    let e = (lambda * s).exp() * theta;
    Ok(TwoPointBounds {
        upper_far: (e >= 1.0).then_some(s + t + (2.0 / lambda) * theta.ln() + k.c1),
        upper_near: (e <= 4.0).then_some(t - s + k.c2),
        lower: s + t + (2.0 / lambda) * theta.ln() - k.c3,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct SegmentDepthBounds {
    pub lower_far: Option<f64>,
    pub lower_near: Option<f64>,
}

/// Lower bounds on the distance from the apex to the connecting segment.
pub fn segment_depth_bounds(k: &PlaneBoundConstants, s: f64, theta: f64) -> Result<SegmentDepthBounds> {
    if !(s > 2.0 * k.r_floor) {
        return Err(Error::InvalidInput(format!(
            "leg must satisfy s > 2R (s = {s}, R = {})",
            k.r_floor
        )));
    }
    if !(theta > 0.0 && theta <= PI) {
        return Err(Error::InvalidInput(format!("theta = {theta} not in (0, pi]")));
    }
    let e = (k.lambda * s).exp() * theta;
    Ok(SegmentDepthBounds {
        lower_far: (e >= 1.0).then_some(-theta.ln() / k.lambda - k.c4),
        lower_near: (e <= 4.0).then_some(s - k.c5),
    })
}

/// Chart-scale distance bound constants in Fermi coordinates: slopes follow
/// the comparison-metric log laws (2/b, 2/a, 1/b), additive parts are fitted
/// against the shifted comparison distances and certified.
#[derive(Clone, Debug)]
pub struct ChartBoundConstants {
    /// lambda of the ambient comparison metric carried by `plane`.
    pub lambda_metric: f64,
    pub plane: PlaneBoundConstants,
    pub a: f64,
    pub b: f64,
    pub r_shift: f64,
    pub chart_radius: f64,
    pub f0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
}

struct ChartGrid {
    s: Vec<f64>,
    spread: Vec<f64>,
    xi: Vec<f64>,
}

fn chart_grid(r_shift: f64, chart_radius: f64, n_s: usize, n_spread: usize, n_xi: usize, jitter: f64) -> ChartGrid {
    let s_lo = (2.0 * r_shift).max(r_shift) + 1e-3;
    let s = (0..n_s)
        .map(|i| s_lo + (40.0 + jitter) * (i as f64 + jitter) / n_s as f64)
        .collect();
    let spread = (0..n_spread)
        .map(|i| (12.0 + jitter) * (i as f64 + jitter) / n_spread as f64)
        .collect();
    let xi = (0..n_xi)
        .map(|i| {
            let x = ((i as f64 + jitter) / (n_xi - 1) as f64).min(1.0);
            chart_radius * (10f64).powf(-9.0 * (1.0 - x))
        })
        .collect();
    ChartGrid { s, spread, xi }
}

/// Separations straddling the chart case threshold e^{b s} xi = 2.
fn adapted_xis(b: f64, s: f64, chart_radius: f64) -> impl Iterator<Item = f64> {
    [0.5, 1.0, 2.0, 4.0, 8.0]
        .into_iter()
        .map(move |c| (c * (-b * s).exp()).clamp(1e-300, chart_radius))
}

impl ChartBoundConstants {
    /// Fit the additive constants for a model with sandwich shift R.
    pub fn fit(model: &WarpedModel, c: &ComparisonConstants, sandwich: &HyperbolicSandwich) -> Self {
        let (a, b) = (c.a, c.b);
        let r = sandwich.r_shift;
        let chart = model.chart_radius();
        let g = chart_grid(r, chart, 44, 30, 60, 0.0);
        let slope_up = 2.0 / b;
        let slope_lo = 2.0 / a;
        let slope_depth = 1.0 / b;

        // boundary separation xi is itself the polar angle of the
        // comparison plane (arclength normal coordinates)
        let mut c2 = f64::NEG_INFINITY;
        let mut c3 = f64::NEG_INFINITY;
        let mut c5 = f64::NEG_INFINITY;
        let mut c7 = f64::NEG_INFINITY;
        let mut c8 = f64::NEG_INFINITY;
        for &s in &g.s {
            let xis: Vec<f64> = g
                .xi
                .iter()
                .copied()
                .chain(adapted_xis(b, s, chart))
                .collect();
            for &xi in &xis {
                let theta = xi;
                for &sp in &g.spread {
                    let t = s + sp;
                    let db = hyp_law_of_cosines(b, s + r, t + r, theta);
                    let da = hyp_law_of_cosines(a, s - r, t - r, theta);
                    let e = (b * s).exp() * xi;
                    if e >= 2.0 {
                        c2 = c2.max(db - s - t - slope_up * xi.ln());
                    }
                    if e <= 2.0 {
                        c3 = c3.max(db - (t - s));
                    }
                    c5 = c5.max(s + t + slope_lo * xi.ln() - da);
                }
                let depth = hyp_segment_depth(b, s + r, theta) - r;
                let e = (b * s).exp() * xi;
                if e >= 2.0 {
                    c7 = c7.max(-slope_depth * xi.ln() - depth);
                }
                if e <= 2.0 {
                    c8 = c8.max(s - depth);
                }
            }
        }
        ChartBoundConstants {
            lambda_metric: b,
            plane: PlaneBoundConstants::fit(b, r),
            a,
            b,
            r_shift: r,
            chart_radius: chart,
            f0: model.f0,
            c1: slope_up,
            c2: inflate(c2),
            c3: inflate(c3),
            c4: slope_lo,
            c5: inflate(c5),
            c6: slope_depth,
            c7: inflate(c7),
            c8: inflate(c8),
        }
    }

    /// Re-certify the fitted constants on an independent finer grid.
    pub fn certify(&self) -> Vec<CertRow> {
        let g = chart_grid(self.r_shift, self.chart_radius, 67, 45, 89, 0.41);
        let (a, b, r) = (self.a, self.b, self.r_shift);
        let slacks: Vec<(usize, f64)> = g
            .s
            .par_iter()
            .flat_map_iter(|&s| {
                let mut out = Vec::new();
                for &xi in &g.xi {
                    let theta = xi;
                    for &sp in &g.spread {
                        let t = s + sp;
                        let db = hyp_law_of_cosines(b, s + r, t + r, theta);
                        let da = hyp_law_of_cosines(a, s - r, t - r, theta);
                        let e = (b * s).exp() * xi;
                        if e >= 2.0 {
                            out.push((0, s + t + self.c1 * xi.ln() + self.c2 - db));
                        }
                        if e <= 2.0 {
                            out.push((1, t - s + self.c3 - db));
                        }
                        out.push((2, da - (s + t + self.c4 * xi.ln() - self.c5)));
                    }
                    let depth = hyp_segment_depth(b, s + r, theta) - r;
                    let e = (b * s).exp() * xi;
                    if e >= 2.0 {
                        out.push((3, depth - (-self.c6 * xi.ln() - self.c7)));
                    }
                    if e <= 2.0 {
                        out.push((4, depth - (s - self.c8)));
                    }
                }
                out
            })
            .collect();
        let ids = [
            "chart_upper_far",
            "chart_upper_near",
            "chart_lower",
            "chart_depth_far",
            "chart_depth_near",
        ];
        ids.iter()
            .enumerate()
            .map(|(i, id)| {
                CertRow::from_slacks(id, slacks.iter().filter(|(j, _)| *j == i).map(|(_, s)| *s))
            })
            .collect()
    }
}

/// Chart-pair bounds in Fermi coordinates; `sigma_rmin_lower` is present
/// only for equal-radius pairs, where the comparison segment's minimum
/// radius has a closed form.
#[derive(Clone, Copy, Debug)]
pub struct ChartPairBounds {
    pub upper_b: Option<f64>,
    pub lower_a: f64,
    pub sigma_rmin_lower: Option<f64>,
    /// Which case predicate held: e^{b s_p} d_Y >= 2.
    pub far_case: bool,
}

/// Distance bounds for a pair in one chart with r >= R.
pub fn chart_pair_bounds(
    k: &ChartBoundConstants,
    model: &WarpedModel,
    p: FermiPoint,
    q: FermiPoint,
) -> Result<ChartPairBounds> {
    let d_y = model.d_y(p.theta, q.theta);
    if d_y > k.chart_radius {
        return Err(Error::OutOfChart {
            separation: d_y,
            radius: k.chart_radius,
        });
    }
    let (s_p, s_q) = if p.r <= q.r { (p.r, q.r) } else { (q.r, p.r) };
    if s_p < k.r_shift {
        return Err(Error::InvalidInput(format!(
            "points must lie above the sandwich shift R = {} (got r = {s_p})",
            k.r_shift
        )));
    }
    let e = (k.b * s_p).exp() * d_y;
    let upper_b = if e >= 2.0 {
        Some(s_p + s_q + k.c1 * d_y.ln() + k.c2)
    } else if e <= 2.0 {
        Some(s_q - s_p + k.c3)
    } else {
        None
    };
    let lower_a = s_p + s_q + k.c4 * d_y.ln() - k.c5;
    let sigma_rmin_lower = if (p.r - q.r).abs() <= 1e-9 {
        if e >= 2.0 {
            Some(-k.c6 * d_y.ln() - k.c7)
        } else {
            Some(s_p - k.c8)
        }
    } else {
        None
    };
    Ok(ChartPairBounds {
        upper_b,
        lower_a,
        sigma_rmin_lower,
        far_case: e >= 2.0,
    })
}

// ---------------------------------------------------------------------------
// containment harnesses
// ---------------------------------------------------------------------------

/// Riccati containment: the integrated mu(r) lies inside the shape envelope.
/// Slack is absolute (the quantities are O(1)).
pub fn certify_riccati_containment(
    sol: &RiccatiSolution,
    c: &ComparisonConstants,
    r_max: f64,
    grid: usize,
) -> CertRow {
    let slacks = (0..=grid).map(|i| {
        let r = r_max * i as f64 / grid as f64;
        let mu = sol.mu(r);
        let (lo, hi) = c.shape_bounds(r);
        (mu - lo).min(hi - mu)
    });
    CertRow::from_slacks("riccati_containment", slacks)
}

/// Shape-operator containment for the model's own f'/f.
pub fn certify_shape_containment(model: &WarpedModel, c: &ComparisonConstants, grid: usize) -> CertRow {
    let slacks = (0..=grid).map(|i| {
        let r = model.r_max * i as f64 / grid as f64;
        let s = model.shape_operator_at(r).unwrap();
        let (lo, hi) = c.shape_bounds(r);
        (s - lo).min(hi - s)
    });
    CertRow::from_slacks("shape_containment", slacks)
}

/// Metric containment: (f/f0)^2 inside the metric envelope, with relative
/// slack (the envelope grows like e^{2br}).
pub fn certify_metric_containment(model: &WarpedModel, c: &ComparisonConstants, grid: usize) -> CertRow {
    let slacks = (0..=grid).map(|i| {
        let r = model.r_max * i as f64 / grid as f64;
        let w = model.normalized_warp(r).unwrap();
        let w2 = w * w;
        let (lo, hi) = c.metric_bounds(r);
        ((w2 - lo) / lo.max(1.0)).min((hi - w2) / hi.max(1.0))
    });
    CertRow::from_slacks("metric_containment", slacks)
}

/// Pointwise sandwich containment of the normalized warp.
pub fn certify_sandwich_pointwise(model: &WarpedModel, sw: &HyperbolicSandwich, grid: usize) -> CertRow {
    let slacks = (0..=grid).filter_map(|i| {
        let r = model.r_max * i as f64 / grid as f64;
        if r <= sw.valid_from {
            return None;
        }
        let w = model.normalized_warp(r).unwrap();
        let lo = (sw.a * (r - sw.r_shift)).sinh() / sw.a;
        let hi = (sw.b * (r + sw.r_shift)).sinh() / sw.b;
        Some(((w - lo) / w.max(1.0)).min((hi - w) / hi.max(1.0)))
    });
    CertRow::from_slacks("sandwich_pointwise", slacks)
}

// ---------------------------------------------------------------------------
// analytic helper inequalities
// ---------------------------------------------------------------------------

/// The six analytic inequalities used by the regularity estimate, each
/// checked on a dense grid.
pub fn helper_inequality_reports(grid: usize) -> Vec<CertRow> {
    let mut rows = Vec::new();

    // alpha acosh(z) <= acosh(z^alpha) for z >= 1, alpha in [0, 1]
    let mut s1 = Vec::new();
    for i in 0..=grid {
        let z = (8.0 * i as f64 / grid as f64).exp(); // z in [1, e^8]
        for j in 0..=40 {
            let alpha = j as f64 / 40.0;
            let lhs = alpha * acosh1p(z - 1.0);
            let rhs = acosh1p(z.powf(alpha) - 1.0);
            s1.push((rhs - lhs) / lhs.max(1.0));
        }
    }
    rows.push(CertRow::from_slacks("tech_acosh_power", s1.into_iter()));

    // (1+x)^alpha <= 1 + x^alpha for x >= 0, alpha in [0, 1]
    let mut s2 = Vec::new();
    for i in 0..=grid {
        let x = (16.0 * i as f64 / grid as f64 - 8.0).exp(); // log grid around 1
        for j in 0..=40 {
            let alpha = j as f64 / 40.0;
            let lhs = (1.0 + x).powf(alpha);
            let rhs = 1.0 + x.powf(alpha);
            s2.push((rhs - lhs) / rhs.max(1.0));
        }
    }
    rows.push(CertRow::from_slacks("tech_one_plus_power", s2.into_iter()));

    // 1 - theta^2/2 <= cos(theta) on [0, pi]
    let s3 = (0..=grid).map(|i| {
        let th = PI * i as f64 / grid as f64;
        th.cos() - (1.0 - th * th / 2.0)
    });
    rows.push(CertRow::from_slacks("tech_cos_lower", s3));

    // cos(theta) <= 1 - theta^2/8 on [0, pi]
    let s4 = (0..=grid).map(|i| {
        let th = PI * i as f64 / grid as f64;
        (1.0 - th * th / 8.0) - th.cos()
    });
    rows.push(CertRow::from_slacks("tech_cos_upper", s4));

    // e^{az-1} <= sinh(az) <= e^{az} for z >= (1/2a)(1 - log(e-2))
    let mut s5 = Vec::new();
    for j in 1..=20 {
        let a = j as f64 / 20.0;
        let z_star = (1.0 - (std::f64::consts::E - 2.0).ln()) / (2.0 * a);
        for i in 0..=grid {
            let z = z_star + 30.0 * i as f64 / grid as f64;
            let x = a * z;
            let lo = (x - 1.0).exp();
            let hi = x.exp();
            let s = x.sinh();
            s5.push(((s - lo) / s).min((hi - s) / hi));
        }
    }
    rows.push(CertRow::from_slacks("tech_sinh_exp", s5.into_iter()));

    // e^{-2y} + e^{-2x} >= (e^{-y} - e^{-x})^2, i.e. 2 e^{-x-y} >= 0
    let mut s6 = Vec::new();
    for i in 0..=grid {
        let x = 30.0 * i as f64 / grid as f64;
        for j in 0..=40 {
            let y = 30.0 * j as f64 / 40.0;
            let lhs = (-2.0 * y).exp() + (-2.0 * x).exp();
            let rhs = ((-y).exp() - (-x).exp()).powi(2);
            s6.push(lhs - rhs);
        }
    }
    rows.push(CertRow::from_slacks("tech_exp_square", s6.into_iter()));

    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{curvature_from_json, PinchingProfile};
    use crate::riccati::integrate_riccati;
    use crate::warp::solve_warp;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cosine_profile() -> PinchingProfile {
        let k = curvature_from_json(&serde_json::json!({
            "kind": "cosine", "mean": 2.125, "amplitude": 1.875, "frequency": 1.0
        }))
        .unwrap();
        PinchingProfile::new(0.5, 2.0, k).unwrap()
    }

    #[test]
    fn constants_flat_boundary() {
        // a=0.5, b=2, lambda=0, Lambda=1: primes substitute 0 and 2b
        let p = cosine_profile();
        let c = comparison_constants(1.0, 0.0, &p).unwrap();
        assert_eq!(c.shape_min_prime, 0.0);
        assert_eq!(c.l1, 0.0);
        assert_eq!(c.shape_max_prime, 4.0);
        assert_relative_eq!(c.l2, 0.5 * 0.5f64 * 3.0f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(c.l2, 0.27465307216702745, max_relative = 1e-12);
    }

    #[test]
    fn constants_interior_eigenvalues() {
        let p = cosine_profile();
        let c = comparison_constants(3.0, 0.25, &p).unwrap();
        assert_eq!(c.shape_min_prime, 0.25);
        assert_eq!(c.shape_max_prime, 3.0);
        assert_relative_eq!(c.l1, 2.0 * 0.5f64.atanh(), max_relative = 1e-12);
        assert_relative_eq!(c.l1, 1.0986122886681098, max_relative = 1e-12);
    }

    #[test]
    fn constants_totally_geodesic_boundary() {
        let p = cosine_profile();
        let c = comparison_constants(0.0, 0.0, &p).unwrap();
        assert_eq!(c.l1, 0.0);
        let (lo, _) = c.shape_bounds(1.0);
        assert_relative_eq!(lo, 0.5 * 0.5f64.tanh(), max_relative = 1e-12);
    }

    #[test]
    fn nonconvex_boundary_is_rejected() {
        let p = cosine_profile();
        assert!(matches!(
            comparison_constants(1.0, -0.1, &p),
            Err(Error::NonconvexBoundary { .. })
        ));
    }

    #[test]
    fn shape_bounds_limits() {
        let p = cosine_profile();
        let c = comparison_constants(1.0, 0.0, &p).unwrap();
        let (lo0, hi0) = c.shape_bounds(0.0);
        assert_eq!(lo0, 0.0);
        assert_relative_eq!(hi0, 4.0, max_relative = 1e-9);
        let (lo, hi) = c.shape_bounds(60.0);
        assert_relative_eq!(lo, 0.5, max_relative = 1e-9);
        assert_relative_eq!(hi, 2.0, max_relative = 1e-9);
        // monotone toward (a, b)
        let (lo1, hi1) = c.shape_bounds(1.0);
        let (lo2, hi2) = c.shape_bounds(2.0);
        assert!(lo1 < lo2 && lo2 < 0.5);
        assert!(hi1 > hi2 && hi2 > 2.0);
    }

    #[test]
    fn metric_bounds_initial_condition() {
        let p = cosine_profile();
        let c = comparison_constants(0.0, 0.0, &p).unwrap();
        let (lo, _) = c.metric_bounds(0.0);
        assert_relative_eq!(lo, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_curvature_metric_lower_bound_is_tight() {
        let m = solve_warp(PinchingProfile::constant(1.0, 1.0, 1.0).unwrap(), 1.0, 0.0, 30.0)
            .unwrap();
        let c = model_constants(&m).unwrap();
        let row = certify_metric_containment(&m, &c, 10_000);
        assert!(row.passed(), "min slack = {}", row.min_slack);
        // equality case: the lower bound is attained
        assert!(row.min_slack.abs() < 1e-9);
    }

    #[test]
    fn strictly_convex_start_metric_upper_bound_is_tight() {
        // f = sinh(r+1): Lambda = coth(1) > b = 1, so L2 = 1 and the upper
        // envelope is exactly sinh^2(r+1)/sinh^2(1)
        let m = solve_warp(
            PinchingProfile::constant(1.0, 1.0, 1.0).unwrap(),
            1.0f64.sinh(),
            1.0f64.cosh(),
            30.0,
        )
        .unwrap();
        let c = model_constants(&m).unwrap();
        assert_relative_eq!(c.l2, 1.0, max_relative = 1e-12);
        let row = certify_metric_containment(&m, &c, 10_000);
        assert!(row.passed(), "min slack = {}", row.min_slack);
    }

    #[test]
    fn cosine_profile_harness_rows_pass() {
        let m = solve_warp(cosine_profile(), 1.0, 0.0, 30.0).unwrap();
        let c = model_constants(&m).unwrap();
        assert!(certify_shape_containment(&m, &c, 10_000).passed());
        assert!(certify_metric_containment(&m, &c, 10_000).passed());
        let sol = integrate_riccati(&m.profile, 0.0, 30.0).unwrap();
        assert!(certify_riccati_containment(&sol, &c, 30.0, 10_000).passed());
    }

    #[test]
    fn law_of_cosines_examples() {
        // coincident rays
        assert_eq!(hyp_law_of_cosines(1.0, 1.0, 1.0, 0.0), 0.0);
        // hyperbolic Pythagorean theorem
        let d = hyp_law_of_cosines(1.0, 1.0, 1.0, PI / 2.0);
        let expected = (1.0f64.cosh().powi(2)).acosh();
        assert_relative_eq!(d, expected, max_relative = 1e-12);
        assert_relative_eq!(d, 1.5133740065965038, max_relative = 1e-10);
        // antipodal rays are additive
        assert_relative_eq!(hyp_law_of_cosines(1.0, 1.0, 1.0, PI), 2.0, max_relative = 1e-12);
        // radial separation
        assert_relative_eq!(hyp_law_of_cosines(2.0, 3.0, 5.0, 0.0), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn law_of_cosines_curvature_scaling() {
        // distance at curvature -lambda^2 is (1/lambda) x distance at -1
        for &(s, t, th) in &[(1.0, 2.0, 0.4), (5.0, 5.0, 0.01), (0.2, 8.0, 3.0)] {
            let lam = 2.5;
            let d1 = hyp_law_of_cosines(1.0, lam * s, lam * t, th);
            let dl = hyp_law_of_cosines(lam, s, t, th);
            assert_relative_eq!(dl, d1 / lam, max_relative = 1e-11);
        }
    }

    #[test]
    fn segment_depth_is_shorter_than_the_leg() {
        for &th in &[0.01, 0.3, 1.0, PI] {
            let u = hyp_segment_depth(1.0, 10.0, th);
            assert!(u < 10.0 && u >= 0.0);
        }
    }

    #[test]
    fn sandwich_shift_for_shifted_sinh_is_the_shift() {
        // f = sinh(r + r0): lower bound certifies for any R >= r0
        let r0: f64 = 1.3;
        let m = solve_warp(
            PinchingProfile::constant(1.0, 1.0, 1.0).unwrap(),
            r0.sinh(),
            r0.cosh(),
            30.0,
        )
        .unwrap();
        let c = model_constants(&m).unwrap();
        let sw = fit_hyperbolic_r(&m, &c).unwrap();
        // the normalized warp is sinh(r+r0)/sinh(r0), so the fitted shift
        // also has to absorb the 1/sinh(r0) normalization; it stays modest
        assert!(sw.r_shift < r0 + 2.0, "R = {}", sw.r_shift);
        assert!(certify_sandwich_pointwise(&m, &sw, 10_000).passed());
    }

    #[test]
    fn sandwich_certifies_for_cosine_model() {
        let m = solve_warp(cosine_profile(), 1.0, 0.0, 30.0).unwrap();
        let c = model_constants(&m).unwrap();
        let sw = fit_hyperbolic_r(&m, &c).unwrap();
        assert!(sw.r_shift > 0.0 && sw.r_shift < 15.0);
        assert!(certify_sandwich_pointwise(&m, &sw, 10_000).passed());
    }

    #[test]
    fn sandwich_shift_grows_with_initial_slope() {
        let mk = |f0p: f64| {
            let m = solve_warp(PinchingProfile::constant(1.0, 1.0, 1.0).unwrap(), 1.0, f0p, 30.0)
                .unwrap();
            let c = model_constants(&m).unwrap();
            fit_hyperbolic_r(&m, &c).unwrap().r_shift
        };
        let r1 = mk(0.0);
        let r2 = mk(3.0);
        assert!(r2 > r1, "R(0) = {r1}, R(3) = {r2}");
    }

    #[test]
    fn short_horizon_is_rejected() {
        let m = solve_warp(cosine_profile(), 1.0, 0.0, 6.0).unwrap();
        let c = model_constants(&m).unwrap();
        assert!(fit_hyperbolic_r(&m, &c).is_err());
    }

    #[test]
    fn plane_constants_certify() {
        let k = PlaneBoundConstants::fit(1.0, 0.9);
        for row in k.certify() {
            assert!(row.passed(), "{}: min slack {}", row.inequality_id, row.min_slack);
        }
        assert!(k.c1 > 0.0 && k.c2 > 0.0 && k.c3 > 0.0 && k.c4 > 0.0 && k.c5 > 0.0);
    }

    #[test]
    fn two_point_bound_examples() {
        let k = PlaneBoundConstants::fit(1.0, 0.9);
        // far case: e^5 * 0.1 = 14.8 >= 1
        let b = two_point_bounds(&k, 5.0, 5.0, 0.1).unwrap();
        let d = hyp_law_of_cosines(1.0, 5.0, 5.0, 0.1);
        assert!(b.require_far().unwrap() >= d);
        assert!(b.lower <= d);
        // near case: e^5 * e^{-7} << 4
        let bn = two_point_bounds(&k, 5.0, 8.0, (-7.0f64).exp()).unwrap();
        let dn = hyp_law_of_cosines(1.0, 5.0, 8.0, (-7.0f64).exp());
        assert!(bn.require_near().unwrap() >= dn);
        assert!(bn.require_far().is_err());
        // lower bound at theta = pi
        let bl = two_point_bounds(&k, 12.0, 12.0, PI).unwrap();
        let dl = hyp_law_of_cosines(1.0, 12.0, 12.0, PI);
        assert!(bl.lower <= dl);
        assert!(dl <= 24.0 + 1e-9);
    }

    #[test]
    fn segment_depth_bound_examples() {
        let k = PlaneBoundConstants::fit(1.0, 0.9);
        let s = 10.0;
        let th = 0.05;
        let u = hyp_segment_depth(1.0, s, th);
        let b = segment_depth_bounds(&k, s, th).unwrap();
        assert!(u >= b.lower_far.unwrap());
        let th2 = 2.0 * (-(1.0f64) * s).exp();
        let u2 = hyp_segment_depth(1.0, s, th2);
        let b2 = segment_depth_bounds(&k, s, th2).unwrap();
        assert!(u2 >= b2.lower_near.unwrap());
    }

    #[test]
    fn chart_constants_certify_for_cosine_model() {
        let m = solve_warp(cosine_profile(), 1.0, 0.0, 30.0).unwrap();
        let c = model_constants(&m).unwrap();
        let sw = fit_hyperbolic_r(&m, &c).unwrap();
        let k = ChartBoundConstants::fit(&m, &c, &sw);
        for row in k.certify() {
            assert!(row.passed(), "{}: min slack {}", row.inequality_id, row.min_slack);
        }
        // degenerate pair: the upper bound is nonnegative at p = q limit
        let p = FermiPoint::new(0.0, sw.r_shift + 5.0);
        let q = FermiPoint::new(1e-6, sw.r_shift + 5.0);
        let bounds = chart_pair_bounds(&k, &m, p, q).unwrap();
        assert!(bounds.upper_b.unwrap() >= 0.0);
        assert!(bounds.sigma_rmin_lower.is_some());
    }

    #[test]
    fn segment_depth_lower_bound_is_positive_far_out() {
        // equal legs s = 8 with boundary separation 0.01 in the constant
        // curvature model: the depth bound -c6 ln(d_Y) - c7 is positive and
        // certified against the exact minimum radius along the segment
        let m = solve_warp(PinchingProfile::constant(1.0, 1.0, 1.0).unwrap(), 1.0, 0.0, 30.0)
            .unwrap();
        let c = model_constants(&m).unwrap();
        let sw = fit_hyperbolic_r(&m, &c).unwrap();
        let k = ChartBoundConstants::fit(&m, &c, &sw);
        let p = FermiPoint::new(0.0, 8.0);
        let q = FermiPoint::new(0.01, 8.0);
        let bounds = chart_pair_bounds(&k, &m, p, q).unwrap();
        let lower = bounds.sigma_rmin_lower.unwrap();
        assert!(bounds.far_case);
        assert!(lower > 0.0, "depth bound {lower}");
        let exact = sw.upper_segment_min_r(8.0, 0.01);
        assert!(exact >= lower, "exact depth {exact} vs bound {lower}");
    }

    #[test]
    fn chart_pair_rejects_wide_separation() {
        let m = solve_warp(cosine_profile(), 1.0, 0.0, 30.0).unwrap();
        let c = model_constants(&m).unwrap();
        let sw = fit_hyperbolic_r(&m, &c).unwrap();
        let k = ChartBoundConstants::fit(&m, &c, &sw);
        let p = FermiPoint::new(0.0, sw.r_shift + 5.0);
        let q = FermiPoint::new(PI, sw.r_shift + 5.0);
        assert!(matches!(
            chart_pair_bounds(&k, &m, p, q),
            Err(Error::OutOfChart { .. })
        ));
    }

    #[test]
    fn helper_inequalities_hold() {
        for row in helper_inequality_reports(400) {
            assert!(
                row.violated_count == 0,
                "{}: {} violations, min slack {}",
                row.inequality_id,
                row.violated_count,
                row.min_slack
            );
        }
    }

    proptest! {
        #[test]
        fn law_of_cosines_is_symmetric_and_metric_like(
            s in 0.0f64..20.0, t in 0.0f64..20.0, th in 0.0f64..PI, lam in 0.3f64..2.5
        ) {
            let d_st = hyp_law_of_cosines(lam, s, t, th);
            let d_ts = hyp_law_of_cosines(lam, t, s, th);
            prop_assert!((d_st - d_ts).abs() <= 1e-9 * d_st.abs().max(1.0));
            // triangle against the apex route
            prop_assert!(d_st <= s + t + 1e-9);
            // radial lower bound
            prop_assert!(d_st >= (s - t).abs() - 1e-9);
        }

        #[test]
        fn shape_envelope_brackets_ab(r in 0.0f64..50.0) {
            let p = cosine_profile();
            let c = comparison_constants(1.0, 0.0, &p).unwrap();
            let (lo, hi) = c.shape_bounds(r);
            // strict for moderate r; the envelopes saturate to (a, b) in
            // floating point at large r
            prop_assert!(lo <= c.a && hi >= c.b);
            if r < 8.0 {
                prop_assert!(lo < c.a && hi > c.b);
            }
        }
    }
}
