//! Double-buffer construction: nested truncated cylinders chosen so that
//! geodesic segments between inner-buffer points stay inside the outer
//! buffer, plus the cutoff height of the special covering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::comparison::ChartBoundConstants;
use crate::distance::geodesic_bvp_distance;
use crate::error::{Error, Result};
use crate::warp::{FermiPoint, WarpedModel};

/// Parameters of a double buffer at a chart center: angular radii (in
/// boundary arclength) and truncation heights.
#[derive(Clone, Copy, Debug)]
pub struct DoubleBufferParams {
    pub epsilon: f64,
    pub delta: f64,
    pub t_ob: f64,
    pub t_ib: f64,
    pub center: f64,
}

impl DoubleBufferParams {
    /// The four closing conditions, as (value, bound) pairs with the
    /// convention value <= bound.
    pub fn condition_values(&self, k: &ChartBoundConstants) -> [(f64, f64); 4] {
        let c3_bound = [
            0.5 * k.c1 * (1.0 / (2.0 * self.epsilon)).ln() - 0.5 * k.c2,
            (1.0 / k.b) * (1.0 / self.epsilon).ln() - 0.5 * k.c3,
            k.c6 * (1.0 / (2.0 * self.epsilon)).ln() - k.c7,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        [
            (self.epsilon + self.delta, k.chart_radius),
            (k.c4 * (1.0 / self.delta).ln() + k.c5, self.t_ob),
            // strict upper bound on t_ob
            (self.t_ob, c3_bound),
            (self.t_ob + k.c8, self.t_ib),
        ]
    }

    pub fn conditions_hold(&self, k: &ChartBoundConstants) -> bool {
        let v = self.condition_values(k);
        v[0].0 <= v[0].1 && v[1].0 <= v[1].1 && v[2].0 < v[2].1 && v[3].0 <= v[3].1
    }
}

/// Choose buffer parameters at `center`: fix delta from chart containment,
/// take t_ob from condition 2, shrink epsilon until condition 3 holds, then
/// set t_ib from condition 4.
pub fn double_buffer(
    center: f64,
    k: &ChartBoundConstants,
    model: &WarpedModel,
) -> Result<DoubleBufferParams> {
    let chart = model.chart_radius();
    let delta = 0.5 * chart;
    let mut epsilon = 0.499 * chart;
    // the fitted constants hold for legs above twice the sandwich shift
    let t_ob = (k.c4 * (1.0 / delta).ln() + k.c5).max(2.0 * k.r_shift + 0.1);
    let c3_bound = |eps: f64| {
        [
            0.5 * k.c1 * (1.0 / (2.0 * eps)).ln() - 0.5 * k.c2,
            (1.0 / k.b) * (1.0 / eps).ln() - 0.5 * k.c3,
            k.c6 * (1.0 / (2.0 * eps)).ln() - k.c7,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    };
    let mut shrinks = 0;
    while t_ob >= c3_bound(epsilon) {
        epsilon *= 0.5;
        shrinks += 1;
        if shrinks > 2000 || epsilon < 1e-300 {
            return Err(Error::Infeasible(format!(
                "no epsilon satisfies the truncation conditions at t_ob = {t_ob}"
            )));
        }
    }
    let t_ib = t_ob + k.c8;
    let params = DoubleBufferParams {
        epsilon,
        delta,
        t_ob,
        t_ib,
        center,
    };
    debug_assert!(params.conditions_hold(k));
    Ok(params)
}

/// Cutoff height of the special covering:
/// T = max{T1, T2, (1/2a)(1 - log(e - 2)) + D}.
pub fn special_cover_t(a: f64, t1: f64, t2: f64, diam: f64) -> f64 {
    let analytic = (1.0 - (std::f64::consts::E - 2.0).ln()) / (2.0 * a) + diam;
    t1.max(t2).max(analytic)
}

/// Result of sampling inner-buffer pairs and checking their connecting
/// geodesic segments against the outer buffer.
#[derive(Clone, Copy, Debug)]
pub struct BufferContainment {
    pub checked: usize,
    pub escapes: usize,
    /// Worst minimum radius over all sampled segments.
    pub min_r_worst: f64,
    pub failures: usize,
}

/// Solve the geodesic segment for `n` sampled IB pairs and verify each stays
/// inside OB. The angular containment is automatic (theta is monotone along
/// geodesics), so the binding check is min r >= t_ob.
pub fn check_buffer_containment(
    model: &WarpedModel,
    params: &DoubleBufferParams,
    n: usize,
    seed: u64,
) -> Result<BufferContainment> {
    let r_hi_cap = (params.t_ib + 4.0).min(model.r_max - 1.0);
    if r_hi_cap <= params.t_ib {
        return Err(Error::Infeasible(format!(
            "horizon r_max = {} leaves no room above t_ib = {}",
            model.r_max, params.t_ib
        )));
    }
    let eps_angle = params.epsilon / model.f0;
    let results: Vec<(bool, f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let p = FermiPoint::new(
                params.center + rng.gen_range(-eps_angle..=eps_angle),
                rng.gen_range(params.t_ib..=r_hi_cap),
            );
            let q = FermiPoint::new(
                params.center + rng.gen_range(-eps_angle..=eps_angle),
                rng.gen_range(params.t_ib..=r_hi_cap),
            );
            match geodesic_bvp_distance(model, p, q) {
                Ok(res) => (res.min_r < params.t_ob, res.min_r, false),
                Err(_) => (false, f64::NAN, true),
            }
        })
        .collect();
    let mut escapes = 0;
    let mut failures = 0;
    let mut min_r_worst = f64::INFINITY;
    for (escaped, min_r, failed) in results {
        if failed {
            failures += 1;
            continue;
        }
        if escaped {
            escapes += 1;
        }
        if min_r.is_finite() {
            min_r_worst = min_r_worst.min(min_r);
        }
    }
    Ok(BufferContainment {
        checked: n,
        escapes,
        min_r_worst,
        failures,
    })
}
