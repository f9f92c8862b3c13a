//! Holder regularity certification of the transition map between the
//! compactifications built from the core subset and a second essential
//! subset: for sampled pairs, d_{K2}(p,q) <= C d_{K1}(p,q)^{a/b} with a
//! fitted C that must be stable under sample doubling.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::comparison::{fit_hyperbolic_r, model_constants, ChartBoundConstants};
use crate::error::{Error, Result};
use crate::geodesic::{GeodesicState, GEODESIC_OPTS};
use crate::ode::{integrate_with_events, Direction, EventSpec, StopReason};
use crate::warp::{FermiPoint, WarpedModel};

use super::boundary::{require_convex, BoundaryArclength, EssentialSubsetBoundary};
use super::buffer::{double_buffer, special_cover_t};
use super::limits::boundary_limit_point;
use super::points::{dk_distance, BoundaryMetric, CompactifiedPoint};

/// Angle reached at the level r = r_level by the outward normal geodesic of
/// the subset launched at parameter angle `theta0`, with the arclength to
/// the crossing.
fn normal_angle_at_level(
    model: &WarpedModel,
    subset: &EssentialSubsetBoundary,
    theta0: f64,
    r_level: f64,
) -> Result<(f64, f64)> {
    let rho = subset.rho(theta0);
    if r_level <= rho {
        return Err(Error::FootPointFailure { theta: theta0 });
    }
    let (theta_dot, r_dot) = subset.outward_normal(model, theta0)?;
    let s0 = GeodesicState {
        theta: theta0,
        r: rho,
        theta_dot,
        r_dot,
        t: 0.0,
    };
    let rhs = |_t: f64, y: &[f64; 4]| {
        let (f, fp) = model.warp_unchecked(y[1]);
        [y[2] / (f * f), y[3], 0.0, y[2] * y[2] * fp / (f * f * f)]
    };
    let cross = EventSpec {
        g: &|_t: f64, y: &[f64; 4]| y[1] - r_level,
        direction: Direction::Rising,
    };
    let y0 = [theta0, rho, s0.angular_momentum(model), r_dot];
    let horizon = (r_level - rho) / r_dot + 1.0;
    let (dense, reason) = integrate_with_events(&rhs, 0.0, y0, horizon, &GEODESIC_OPTS, &[cross])?;
    match reason {
        StopReason::Event(_) => {
            let y = dense.eval(dense.t_end());
            Ok((y[0], dense.t_end()))
        }
        StopReason::Completed => Err(Error::FootPointFailure { theta: theta0 }),
    }
}

/// Fermi coordinates of `point` relative to the second subset: the foot
/// parameter angle on the boundary and the normal distance, solved by
/// inverting the subset's normal exponential map on the point's level.
pub fn k2_fermi_coordinates(
    model: &WarpedModel,
    subset: &EssentialSubsetBoundary,
    point: FermiPoint,
) -> Result<(f64, f64)> {
    if point.r <= subset.rho_max() {
        return Err(Error::FootPointFailure { theta: point.theta });
    }
    let target = point.theta;
    let miss = |theta0: f64| -> Result<(f64, f64)> {
        let (angle, t) = normal_angle_at_level(model, subset, theta0, point.r)?;
        Ok((angle - target, t))
    };
    // derivative-free bracketing on the boundary parameter, then Illinois
    let mut w = 0.75;
    let (mut lo, mut hi, mut m_lo, mut m_hi) = loop {
        let lo = target - w;
        let hi = target + w;
        let m_lo = miss(lo)?.0;
        let m_hi = miss(hi)?.0;
        if m_lo < 0.0 && m_hi > 0.0 {
            break (lo, hi, m_lo, m_hi);
        }
        w *= 2.0;
        if w > TAU {
            return Err(Error::FootPointFailure { theta: point.theta });
        }
    };
    let mut best: Option<(f64, f64, f64)> = None;
    let mut side = 0i8;
    for _ in 0..80 {
        let mid = (lo * m_hi - hi * m_lo) / (m_hi - m_lo);
        let mid = if mid > lo && mid < hi {
            mid
        } else {
            0.5 * (lo + hi)
        };
        let (m, t) = miss(mid)?;
        if best.map_or(true, |(bm, ..)| m.abs() < bm) {
            best = Some((m.abs(), mid, t));
        }
        if m.abs() < 1e-11 {
            break;
        }
        if m < 0.0 {
            lo = mid;
            m_lo = m;
            if side == -1 {
                m_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            m_hi = m;
            if side == 1 {
                m_lo *= 0.5;
            }
            side = 1;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let (m_best, theta_foot, r_tilde) = best.ok_or(Error::FootPointFailure {
        theta: point.theta,
    })?;
    if m_best > 1e-8 {
        return Err(Error::FootPointFailure { theta: point.theta });
    }
    Ok((theta_foot, r_tilde))
}

/// The boundary parameter on the second subset whose outward normal
/// geodesic is asymptotic to the core-normal ray with ideal angle
/// `theta_inf`: the inverse of the boundary correspondence.
pub fn inverse_boundary_map(
    model: &WarpedModel,
    subset: &EssentialSubsetBoundary,
    theta_inf: f64,
    r_target: f64,
) -> Result<f64> {
    let miss = |q: f64| -> Result<f64> {
        Ok(boundary_limit_point(model, subset, q, r_target)?.theta_inf - theta_inf)
    };
    let mut w = 0.75;
    let (mut lo, mut hi, mut m_lo, mut m_hi) = loop {
        let lo = theta_inf - w;
        let hi = theta_inf + w;
        let m_lo = miss(lo)?;
        let m_hi = miss(hi)?;
        if m_lo < 0.0 && m_hi > 0.0 {
            break (lo, hi, m_lo, m_hi);
        }
        w *= 2.0;
        if w > TAU {
            return Err(Error::FootPointFailure { theta: theta_inf });
        }
    };
    let mut side = 0i8;
    for _ in 0..80 {
        let mid = (lo * m_hi - hi * m_lo) / (m_hi - m_lo);
        let mid = if mid > lo && mid < hi {
            mid
        } else {
            0.5 * (lo + hi)
        };
        let m = miss(mid)?;
        if m.abs() < 1e-10 || hi - lo < 1e-14 {
            return Ok(mid);
        }
        if m < 0.0 {
            lo = mid;
            m_lo = m;
            if side == -1 {
                m_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            m_hi = m;
            if side == 1 {
                m_lo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which sampling stratum a pair came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairCase {
    /// r_q - r_p >= log 2
    RadialFar,
    /// 0 <= r_q - r_p <= log 2
    RadialNear,
    /// both endpoints on the boundary at infinity
    Boundary,
}

impl PairCase {
    pub fn tag(&self) -> &'static str {
        match self {
            PairCase::RadialFar => "case1",
            PairCase::RadialNear => "case2",
            PairCase::Boundary => "boundary",
        }
    }
}

/// One evaluated sample pair of the certificate.
#[derive(Clone, Copy, Debug)]
pub struct HolderSample {
    pub theta_p: f64,
    pub r_p: f64,
    pub theta_q: f64,
    pub r_q: f64,
    pub d_k1: f64,
    pub d_k2: f64,
    pub ratio: f64,
    pub case: PairCase,
}

/// Certificate of the two-subset distance comparison.
#[derive(Clone, Debug)]
pub struct HolderCertificate {
    /// Target exponent a/b.
    pub alpha_target: f64,
    pub c_fitted: f64,
    pub n_samples: usize,
    /// max over samples of d_K2 - c_fitted d_K1^alpha; nonpositive when the
    /// fitted inequality certifies.
    pub max_violation: f64,
    /// Cutoff height of the special covering used for sampling.
    pub t_special: f64,
    /// Tightest empirical exponent from the log-log envelope fit.
    pub alpha_hat: f64,
    pub c_case1: f64,
    pub c_case2: f64,
    pub c_boundary: f64,
    /// Fitted constant over the first half of the samples.
    pub c_half: f64,
    /// Relative change of c_fitted when the sample count doubles from n/2.
    pub stability_change: f64,
    pub passed: bool,
    pub samples: Vec<HolderSample>,
}

fn envelope_exponent(samples: &[HolderSample]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.d_k1 > 1e-10 && s.d_k2 > 0.0)
        .map(|s| (s.d_k1.log10(), s.d_k2.log10()))
        .collect();
    if pts.len() < 8 {
        return f64::NAN;
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-6 {
        return f64::NAN;
    }
    const BINS: usize = 24;
    let mut env = vec![f64::NEG_INFINITY; BINS];
    for (x, y) in &pts {
        let b = (((x - lo) / (hi - lo)) * BINS as f64) as usize;
        let b = b.min(BINS - 1);
        env[b] = env[b].max(*y);
    }
    // least squares over occupied bins
    let mut n = 0.0;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (b, &y) in env.iter().enumerate() {
        if y.is_finite() {
            let x = lo + (b as f64 + 0.5) / BINS as f64 * (hi - lo);
            n += 1.0;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Certify d_{K2} <= C d_{K1}^{a/b} on stratified sample pairs above the
/// special neighbourhood of infinity, with radial-far, radial-near and
/// boundary strata, and record stability under sample doubling.
pub fn holder_certify(
    model: &WarpedModel,
    subset: &EssentialSubsetBoundary,
    n_samples: usize,
    seed: u64,
) -> Result<HolderCertificate> {
    if n_samples < 10 {
        return Err(Error::InvalidInput("need at least 10 samples".into()));
    }
    require_convex(subset, model)?;
    let c = model_constants(model)?;
    let sandwich = fit_hyperbolic_r(model, &c)?;
    let k = ChartBoundConstants::fit(model, &c, &sandwich);
    let buffer = double_buffer(0.0, &k, model)?;
    let rho_max = subset.rho_max();
    let t1 = buffer.t_ib;
    // a second-subset cylinder of height t sits above core height t - rho_max
    let t2 = t1 + rho_max;
    let diam = rho_max + std::f64::consts::PI * model.f0;
    let t_special = special_cover_t(model.profile.a, t1, t2, diam);

    let r_base = t_special + rho_max + 0.25;
    let band = 2.0;
    let dr_far_max = std::f64::consts::LN_2 + 1.5;
    let r_cap_needed = r_base + band + dr_far_max;
    if r_cap_needed > model.r_max - 0.5 {
        return Err(Error::Infeasible(format!(
            "sampling band up to r = {r_cap_needed:.2} exceeds the horizon r_max = {}; \
             rebuild the model with a larger r_max",
            model.r_max
        )));
    }
    let arc = BoundaryArclength::build(subset, model)?;
    let r_target = (r_base + band + dr_far_max + 1.0).min(model.r_max);
    let chart_arc = 0.45 * model.chart_radius();
    let alpha = model.profile.alpha();

    let samples: Vec<HolderSample> = (0..n_samples)
        .into_par_iter()
        .map(|i| -> Result<HolderSample> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64).wrapping_mul(0x9E3779B97F4A7C15));
            let case = match i % 5 {
                0 | 1 => PairCase::RadialFar,
                2 | 3 => PairCase::RadialNear,
                _ => PairCase::Boundary,
            };
            let theta_p = rng.gen_range(0.0..TAU);
            // angular separations mix a log-uniform scale with a uniform one
            let sep_arc = if rng.gen_bool(0.5) {
                chart_arc * 10f64.powf(rng.gen_range(-6.0..0.0))
            } else {
                rng.gen_range(0.0..chart_arc)
            };
            let dtheta = sep_arc / model.f0 * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let theta_q = theta_p + dtheta;

            match case {
                PairCase::Boundary => {
                    let qp = inverse_boundary_map(model, subset, theta_p, r_target)?;
                    let qq = inverse_boundary_map(model, subset, theta_q, r_target)?;
                    let p1 = CompactifiedPoint::boundary(theta_p);
                    let q1 = CompactifiedPoint::boundary(theta_q);
                    let d_k1 = dk_distance(model, p1, q1);
                    let d_k2 = arc.d_boundary(qp, qq);
                    let ratio = if d_k1 > 1e-10 {
                        d_k2 / d_k1.powf(alpha)
                    } else {
                        f64::NAN
                    };
                    Ok(HolderSample {
                        theta_p,
                        r_p: f64::INFINITY,
                        theta_q,
                        r_q: f64::INFINITY,
                        d_k1,
                        d_k2,
                        ratio,
                        case,
                    })
                }
                _ => {
                    let r_p = rng.gen_range(r_base..r_base + band);
                    let dr = match case {
                        PairCase::RadialFar => {
                            rng.gen_range(std::f64::consts::LN_2..dr_far_max)
                        }
                        _ => rng.gen_range(0.0..std::f64::consts::LN_2),
                    };
                    let r_q = r_p + dr;
                    let p = FermiPoint::new(theta_p, r_p);
                    let q = FermiPoint::new(theta_q, r_q);
                    let (foot_p, rt_p) = k2_fermi_coordinates(model, subset, p)?;
                    let (foot_q, rt_q) = k2_fermi_coordinates(model, subset, q)?;
                    let p1 = CompactifiedPoint::interior(theta_p, r_p);
                    let q1 = CompactifiedPoint::interior(theta_q, r_q);
                    let d_k1 = dk_distance(model, p1, q1);
                    let p2 = CompactifiedPoint::interior(foot_p, rt_p);
                    let q2 = CompactifiedPoint::interior(foot_q, rt_q);
                    let d_k2 = (p2.exp_minus_r() - q2.exp_minus_r()).abs()
                        + arc.d_boundary(foot_p, foot_q);
                    let ratio = if d_k1 > 1e-10 {
                        d_k2 / d_k1.powf(alpha)
                    } else {
                        f64::NAN
                    };
                    Ok(HolderSample {
                        theta_p,
                        r_p,
                        theta_q,
                        r_q,
                        d_k1,
                        d_k2,
                        ratio,
                        case,
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    fn max_ratio<'a>(it: impl Iterator<Item = &'a HolderSample>) -> f64 {
        it.filter(|s| s.ratio.is_finite())
            .map(|s| s.ratio)
            .fold(0.0, f64::max)
    }
    let c_fitted = max_ratio(samples.iter());
    let c_half = max_ratio(samples.iter().take(n_samples / 2));
    let c_case1 = max_ratio(samples.iter().filter(|s| s.case == PairCase::RadialFar));
    let c_case2 = max_ratio(samples.iter().filter(|s| s.case == PairCase::RadialNear));
    let c_boundary = max_ratio(samples.iter().filter(|s| s.case == PairCase::Boundary));
    // evaluated through the ratio so the fitted maximum gives exactly zero
    let max_violation = samples
        .iter()
        .filter(|s| s.d_k1 > 1e-10 && s.ratio.is_finite())
        .map(|s| (s.ratio - c_fitted) * s.d_k1.powf(alpha))
        .fold(f64::NEG_INFINITY, f64::max);
    let stability_change = if c_half > 0.0 {
        (c_fitted - c_half).abs() / c_half
    } else {
        f64::INFINITY
    };
    let alpha_hat = envelope_exponent(&samples);
    let passed = c_fitted.is_finite()
        && c_fitted > 0.0
        && max_violation <= 0.0
        && stability_change <= 0.2;
    Ok(HolderCertificate {
        alpha_target: alpha,
        c_fitted,
        n_samples,
        max_violation,
        t_special,
        alpha_hat,
        c_case1,
        c_case2,
        c_boundary,
        c_half,
        stability_change,
        passed,
        samples,
    })
}
