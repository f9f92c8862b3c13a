//! Warped-product model manifolds g = dr^2 + f(r)^2 dtheta^2 over a circle,
//! with the warp f obtained by integrating f'' = k(r) f.
//!
//! The warp is stored as dense output with cubic Hermite interpolation
//! between accepted steps; f' is stored alongside and f'' is recovered via
//! the exact identity f'' = k f rather than by differencing.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::profile::PinchingProfile;

/// Warp solves use a tighter tolerance than the crate default: the metric
/// containment checks include equality cases where the verified bound is
/// exact, and local errors of the linear warp equation accumulate additively.
const WARP_RTOL: f64 = 1e-11;
const WARP_ATOL: f64 = 1e-14;
const WARP_H_MAX: f64 = 0.01;

/// Dense (f, f') table over [0, r_max] with cubic Hermite interpolation.
struct WarpTable {
    r: Vec<f64>,
    f: Vec<f64>,
    fp: Vec<f64>,
    /// f'' at the nodes, equal to k(r) f(r).
    fpp: Vec<f64>,
    /// Uniform acceleration grid: cell -> first candidate node index.
    lookup: Vec<u32>,
    cell: f64,
}

impl WarpTable {
    fn build(r: Vec<f64>, f: Vec<f64>, fp: Vec<f64>, fpp: Vec<f64>) -> Self {
        let n_cells = (r.len() * 2).max(16);
        let r_max = *r.last().unwrap();
        let cell = r_max / n_cells as f64;
        let mut lookup = vec![0u32; n_cells + 1];
        let mut j = 0usize;
        for (c, slot) in lookup.iter_mut().enumerate() {
            let edge = c as f64 * cell;
            while j + 1 < r.len() && r[j + 1] <= edge {
                j += 1;
            }
            *slot = j as u32;
        }
        WarpTable {
            r,
            f,
            fp,
            fpp,
            lookup,
            cell,
        }
    }

    fn interval(&self, r: f64) -> usize {
        let c = ((r / self.cell) as usize).min(self.lookup.len() - 1);
        let mut i = (self.lookup[c] as usize).min(self.r.len() - 2);
        while i + 2 < self.r.len() && self.r[i + 1] <= r {
            i += 1;
        }
        i
    }

    /// Evaluate (f, f') at `r`; the caller guarantees r in [0, r_max] up to
    /// roundoff (values are clamped).
    fn eval(&self, r: f64) -> (f64, f64) {
        let r = r.clamp(self.r[0], *self.r.last().unwrap());
        let i = self.interval(r);
        let h = self.r[i + 1] - self.r[i];
        let s = (r - self.r[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let f = h00 * self.f[i] + h * h10 * self.fp[i] + h01 * self.f[i + 1] + h * h11 * self.fp[i + 1];
        let fp =
            h00 * self.fp[i] + h * h10 * self.fpp[i] + h01 * self.fp[i + 1] + h * h11 * self.fpp[i + 1];
        (f, fp)
    }
}

/// A point (theta, r) in Fermi coordinates over the core boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FermiPoint {
    pub theta: f64,
    pub r: f64,
}

impl FermiPoint {
    pub fn new(theta: f64, r: f64) -> Self {
        FermiPoint { theta, r }
    }
}

/// Metric components in Fermi coordinates (y, r).
#[derive(Clone, Copy, Debug)]
pub struct MetricComponents {
    pub g_rr: f64,
    pub g_theta_theta: f64,
}

/// The nonzero Christoffel symbols of a warped product.
#[derive(Clone, Copy, Debug)]
pub struct ChristoffelSymbols {
    /// Gamma^r_{theta theta} = -f f'
    pub r_theta_theta: f64,
    /// Gamma^theta_{r theta} = f'/f
    pub theta_r_theta: f64,
}

/// A 2-D model manifold dr^2 + f(r)^2 dtheta^2 with prescribed pinched
/// negative curvature sec = -k(r). Immutable after construction.
pub struct WarpedModel {
    pub profile: PinchingProfile,
    pub f0: f64,
    pub f0_prime: f64,
    pub r_max: f64,
    table: WarpTable,
}

/// Integrate f'' = k(r) f on [0, r_max] with breakpoint-aligned steps.
pub fn solve_warp(
    profile: PinchingProfile,
    f0: f64,
    f0_prime: f64,
    r_max: f64,
) -> Result<WarpedModel> {
    if !(f0 > 0.0) {
        return Err(Error::InvalidInput(format!("f0 must be positive, got {f0}")));
    }
    if !(f0_prime >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "f0_prime must be nonnegative, got {f0_prime}"
        )));
    }
    if !(r_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "r_max must be positive, got {r_max}"
        )));
    }
    profile.validate_pinching(r_max, 10_000)?;

    let opts = OdeOptions::with_tol(WARP_RTOL, WARP_ATOL).h_max(WARP_H_MAX);
    let mut segment_edges = vec![0.0];
    segment_edges.extend(profile.breakpoints_in(0.0, r_max));
    segment_edges.push(r_max);

    let mut r_nodes = Vec::new();
    let mut f_nodes = Vec::new();
    let mut fp_nodes = Vec::new();
    let mut state = [f0, f0_prime];
    let rhs = |r: f64, y: &[f64; 2]| [y[1], profile.k(r) * y[0]];
    for w in segment_edges.windows(2) {
        let sol = integrate(&rhs, w[0], state, w[1], &opts)?;
        let skip = usize::from(!r_nodes.is_empty());
        for (t, y) in sol.nodes().skip(skip) {
            r_nodes.push(t);
            f_nodes.push(y[0]);
            fp_nodes.push(y[1]);
        }
        state = sol.eval(w[1]);
    }
    let fpp_nodes: Vec<f64> = r_nodes
        .iter()
        .zip(f_nodes.iter())
        .map(|(&r, &f)| profile.k(r) * f)
        .collect();

    let table = WarpTable::build(r_nodes, f_nodes, fp_nodes, fpp_nodes);
    Ok(WarpedModel {
        profile,
        f0,
        f0_prime,
        r_max,
        table,
    })
}

impl WarpedModel {
    fn check_horizon(&self, r: f64) -> Result<()> {
        if r < -1e-12 || r > self.r_max * (1.0 + 1e-12) {
            return Err(Error::OutOfHorizon {
                r,
                r_max: self.r_max,
            });
        }
        Ok(())
    }

    /// (f, f') at `r`, checked against the horizon.
    pub fn warp(&self, r: f64) -> Result<(f64, f64)> {
        self.check_horizon(r)?;
        Ok(self.table.eval(r))
    }

    /// Unchecked fast path for inner integration loops; clamps to the table.
    #[inline]
    pub(crate) fn warp_unchecked(&self, r: f64) -> (f64, f64) {
        self.table.eval(r)
    }

    pub fn metric_at(&self, _y: f64, r: f64) -> Result<MetricComponents> {
        let (f, _) = self.warp(r)?;
        Ok(MetricComponents {
            g_rr: 1.0,
            g_theta_theta: f * f,
        })
    }

    pub fn christoffel_at(&self, r: f64) -> Result<ChristoffelSymbols> {
        let (f, fp) = self.warp(r)?;
        Ok(ChristoffelSymbols {
            r_theta_theta: -f * fp,
            theta_r_theta: fp / f,
        })
    }

    /// Sectional curvature -f''/f = -k(r); f'' is recovered from the warp
    /// identity so this lies in [-b^2, -a^2] exactly when the profile does.
    pub fn sectional_curvature_at(&self, r: f64) -> Result<f64> {
        self.check_horizon(r)?;
        Ok(-self.profile.k(r))
    }

    /// Shape operator eigenvalue f'/f of the level set {r = const}.
    pub fn shape_operator_at(&self, r: f64) -> Result<f64> {
        let (f, fp) = self.warp(r)?;
        Ok(fp / f)
    }

    /// Warp in boundary-arclength normalization, f(r)/f(0); this is the
    /// quantity sandwiched by the metric bounds (Omega = omega = 1).
    pub fn normalized_warp(&self, r: f64) -> Result<f64> {
        Ok(self.warp(r)?.0 / self.f0)
    }

    /// Length of the core boundary circle Y.
    pub fn circumference(&self) -> f64 {
        2.0 * PI * self.f0
    }

    /// Geodesic distance on Y between two angles, in arclength.
    pub fn d_y(&self, theta1: f64, theta2: f64) -> f64 {
        let c = 2.0 * PI;
        let d = (theta1 - theta2).rem_euclid(c);
        self.f0 * d.min(c - d)
    }

    /// Radius of a normal-coordinate chart on Y: half the smaller of the
    /// injectivity radius (pi f0) and pi, measured in arclength.
    pub fn chart_radius(&self) -> f64 {
        0.5 * (PI * self.f0).min(PI)
    }

    /// Shape-operator eigenvalue extremes on Y; constant by rotational
    /// symmetry, so Lambda = lambda = f0'/f0.
    pub fn boundary_shape_eigenvalue(&self) -> f64 {
        self.f0_prime / self.f0
    }
}

/// Constant-curvature model of curvature -lambda^2, realized as the warped
/// model with f(r) = sinh(lambda (r + r0))/lambda for a chosen r0 > 0.
pub struct HyperbolicModel {
    pub lambda: f64,
    pub r0: f64,
    pub model: WarpedModel,
}

impl HyperbolicModel {
    pub fn new(lambda: f64, r0: f64, r_max: f64) -> Result<Self> {
        if !(lambda > 0.0 && r0 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "hyperbolic model needs lambda > 0 and r0 > 0 (got {lambda}, {r0})"
            )));
        }
        // pinching interval [min(lambda,1), max(lambda,1)] keeps a <= 1 <= b
        let a = lambda.min(1.0);
        let b = lambda.max(1.0);
        let profile = PinchingProfile::constant(a, b, lambda * lambda)?;
        let f0 = (lambda * r0).sinh() / lambda;
        let f0_prime = (lambda * r0).cosh();
        let model = solve_warp(profile, f0, f0_prime, r_max)?;
        Ok(HyperbolicModel { lambda, r0, model })
    }

    /// Closed-form warp sinh(lambda (r + r0))/lambda.
    pub fn f_exact(&self, r: f64) -> f64 {
        (self.lambda * (r + self.r0)).sinh() / self.lambda
    }
}
