//! Boundary correspondence and asymptotics: the ideal angle reached by a
//! subset's outward normal geodesic, with a rigorous truncation tail bound,
//! and the monitored gap between an untrapped geodesic and its asymptotic
//! normal ray.

use crate::comparison::model_constants;
use crate::error::{Error, Result};
use crate::geodesic::{integrate_geodesic_with, GeodesicPath, GeodesicState, GEODESIC_OPTS};
use crate::warp::WarpedModel;

use super::boundary::EssentialSubsetBoundary;

/// Ideal-angle estimate for a normal geodesic, with its truncation bound.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryLimit {
    /// Angle theta(t_exit) on the core circle, unwrapped.
    pub theta_inf: f64,
    /// Bound on |true limit - theta_inf| from the metric lower bound.
    pub tail_bound: f64,
    pub t_exit: f64,
    pub r_dot_exit: f64,
}

/// Tail of the angular integral past radius `r_exit` with radial speed at
/// least `v`, using the conserved momentum J = f^2 theta_dot and the metric
/// lower bound f^2 >= f0^2 L3 cosh^2(a(r+L1)):
/// |theta_inf - theta(t)| <= 2 |J| e^{-2a(r+L1)} / (f0^2 L3 a v).
fn angular_tail_bound(model: &WarpedModel, r_exit: f64, v: f64, j_abs: f64) -> Result<f64> {
    let c = model_constants(model)?;
    let a = c.a;
    Ok(2.0 * j_abs * (-2.0 * a * (r_exit + c.l1)).exp() / (model.f0 * model.f0 * c.l3 * a * v))
}

/// Integrate the outward normal geodesic of the subset from `q_prime` until
/// r >= r_target and report the angle there together with the tail bound.
pub fn boundary_limit_point(
    model: &WarpedModel,
    subset: &EssentialSubsetBoundary,
    q_prime: f64,
    r_target: f64,
) -> Result<BoundaryLimit> {
    let rho = subset.rho(q_prime);
    if r_target <= rho || r_target > model.r_max {
        return Err(Error::InvalidInput(format!(
            "r_target = {r_target} must lie in (rho(q') = {rho}, r_max = {}]",
            model.r_max
        )));
    }
    let (theta_dot, r_dot) = subset.outward_normal(model, q_prime)?;
    let initial = GeodesicState {
        theta: q_prime,
        r: rho,
        theta_dot,
        r_dot,
        t: 0.0,
    };
    // normal geodesics have r_dot(0) > 0 and convex r, so r grows at least
    // linearly; this horizon cannot be exhausted before the target
    let horizon = (r_target - rho) / r_dot + 1.0;
    let path = integrate_geodesic_with(model, &initial, horizon, &GEODESIC_OPTS)?;
    let end = path.eval(model, path.t_end);
    if end.r < r_target * (1.0 - 1e-9) {
        return Err(Error::TrappedGeodesic { r_target });
    }
    let tail_bound = angular_tail_bound(model, end.r, end.r_dot, end.angular_momentum(model).abs())?;
    Ok(BoundaryLimit {
        theta_inf: end.theta,
        tail_bound,
        t_exit: path.t_end,
        r_dot_exit: end.r_dot,
    })
}

/// As [`boundary_limit_point`], failing when the tail bound exceeds the
/// requested precision.
pub fn boundary_limit_point_with_precision(
    model: &WarpedModel,
    subset: &EssentialSubsetBoundary,
    q_prime: f64,
    r_target: f64,
    precision: f64,
) -> Result<BoundaryLimit> {
    let limit = boundary_limit_point(model, subset, q_prime, r_target)?;
    if limit.tail_bound > precision {
        return Err(Error::InvalidInput(format!(
            "tail bound {} exceeds requested precision {precision}; raise r_target",
            limit.tail_bound
        )));
    }
    Ok(limit)
}

/// Monitored upper bounds on the distance between an untrapped geodesic and
/// its asymptotic normal ray, split into the radial offset |t - sigma_r(t)|
/// and the lateral level-curve bound, with the analytic cap pi/(2 a r_dot).
#[derive(Clone, Debug)]
pub struct AsymptoteGap {
    pub t: Vec<f64>,
    pub radial_offset: Vec<f64>,
    pub lateral_bound: Vec<f64>,
    /// Analytic cap on the lateral bound at each monitor time.
    pub lateral_cap: Vec<f64>,
    pub radial_sup: f64,
    pub lateral_sup: f64,
}

/// Monitor the asymptote gap along `path` at `n_monitor` times past the
/// first instant of positive radial speed.
pub fn asymptote_gap(
    model: &WarpedModel,
    path: &GeodesicPath,
    n_monitor: usize,
) -> Result<AsymptoteGap> {
    let nodes = path.nodes(model);
    let t_first = nodes
        .iter()
        .find(|s| s.r_dot > 1e-8)
        .map(|s| s.t)
        .ok_or(Error::NotUntrapped)?;
    let t_end = path.t_end;
    let end = path.eval(model, t_end);
    if end.r_dot <= 0.0 {
        return Err(Error::NotUntrapped);
    }
    let a = model.profile.a;
    let theta_tail = angular_tail_bound(model, end.r, end.r_dot, end.angular_momentum(model).abs())?;

    let mut out = AsymptoteGap {
        t: Vec::with_capacity(n_monitor),
        radial_offset: Vec::with_capacity(n_monitor),
        lateral_bound: Vec::with_capacity(n_monitor),
        lateral_cap: Vec::with_capacity(n_monitor),
        radial_sup: 0.0,
        lateral_sup: 0.0,
    };
    for i in 0..n_monitor {
        let t = t_first + (t_end - t_first) * i as f64 / (n_monitor.max(2) - 1) as f64;
        let s = path.eval(model, t);
        let radial = (t - s.r).abs();
        // theta is monotone along the geodesic, so the angular travel up to
        // the horizon is |theta(t_end) - theta(t)| exactly
        let (f_level, _) = model.warp_unchecked(s.r);
        let measured = f_level * (end.theta - s.theta).abs();
        // two valid bounds on the beyond-horizon part: the momentum-aware
        // angular tail scaled to this level, and the Jacobi-ratio length
        // tail (pi/2 - gd)/(a v), whose t = t_end value is the analytic cap
        let tail_angle = f_level * theta_tail;
        let x = a * (end.r - s.r);
        let tail_length =
            (std::f64::consts::FRAC_PI_2 - x.sinh().atan()) / (a * end.r_dot);
        let lateral = measured + tail_angle.min(tail_length);
        let cap = std::f64::consts::PI / (2.0 * a * s.r_dot.max(1e-12));
        out.t.push(t);
        out.radial_offset.push(radial);
        out.lateral_bound.push(lateral);
        out.lateral_cap.push(cap);
        out.radial_sup = out.radial_sup.max(radial);
        out.lateral_sup = out.lateral_sup.max(lateral);
    }
    Ok(out)
}
