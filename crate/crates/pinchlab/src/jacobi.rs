//! Normal Jacobi fields along a geodesic: j'' = k(r(t)) j, with the
//! curvature looked up on the carrying path's dense output.

use crate::error::{Error, Result};
use crate::geodesic::GeodesicPath;
use crate::ode::{integrate, DenseSolution, OdeOptions};
use crate::warp::WarpedModel;

/// Jacobi integration shares the tight warp tolerance: the growth bound has
/// an exact equality case at constant curvature.
const JACOBI_RTOL: f64 = 1e-11;
const JACOBI_ATOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug)]
pub struct JacobiState {
    /// Normal Jacobi component magnitude.
    pub j: f64,
    /// Covariant derivative component.
    pub j_dot: f64,
    pub t: f64,
}

pub struct JacobiSolution {
    dense: DenseSolution<2>,
    pub t_end: f64,
}

impl JacobiSolution {
    pub fn eval(&self, t: f64) -> JacobiState {
        let y = self.dense.eval(t);
        JacobiState {
            j: y[0],
            j_dot: y[1],
            t: t.clamp(0.0, self.t_end),
        }
    }

    pub fn nodes(&self) -> Vec<JacobiState> {
        self.dense
            .nodes()
            .map(|(t, y)| JacobiState {
                j: y[0],
                j_dot: y[1],
                t,
            })
            .collect()
    }

    /// Residual |j'' + sec(t) j| of the Jacobi equation, with j'' taken from
    /// the derivative of the dense interpolant.
    pub fn residual_at(&self, model: &WarpedModel, path: &GeodesicPath, t: f64) -> f64 {
        let y = self.dense.eval(t);
        let dy = self.dense.eval_derivative(t);
        let r = path.eval(model, t).r;
        let sec = -model.profile.k(r);
        (dy[1] + sec * y[0]).abs()
    }
}

/// Integrate the Jacobi equation along `path` from `initial`.
///
/// The claimed growth bound j(t) >= j(0) cosh(a t) needs j(0) >= 0 and
/// <J(0), D_t J(0)> >= 0, encoded as j(0) j_dot(0) >= 0; both are enforced.
pub fn integrate_jacobi(
    model: &WarpedModel,
    path: &GeodesicPath,
    initial: &JacobiState,
) -> Result<JacobiSolution> {
    if initial.j < 0.0 {
        return Err(Error::InvalidInput(format!(
            "initial Jacobi magnitude must be nonnegative, got {}",
            initial.j
        )));
    }
    if initial.j * initial.j_dot < 0.0 {
        return Err(Error::InvalidInput(
            "initial Jacobi data must satisfy j(0) j_dot(0) >= 0".into(),
        ));
    }
    let rhs = |t: f64, y: &[f64; 2]| {
        let r = path.eval(model, t).r;
        [y[1], model.profile.k(r) * y[0]]
    };
    let opts = OdeOptions::with_tol(JACOBI_RTOL, JACOBI_ATOL).h_max(0.05);
    let dense = integrate(&rhs, 0.0, [initial.j, initial.j_dot], path.t_end, &opts)?;
    let t_end = dense.t_end();
    Ok(JacobiSolution { dense, t_end })
}
