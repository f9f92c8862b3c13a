//! Adaptive Dormand-Prince 5(4) integration with continuous (dense) output
//! and event detection.
//!
//! All three ODE systems in this crate (warp equation, geodesic equation,
//! Jacobi and Riccati equations) are smooth and non-stiff, so a single
//! embedded explicit pair with a quartic interpolant covers every use.
//! Events are located by bisection on the dense output.

use crate::error::{Error, Result};

/// Butcher tableau of the Dormand-Prince 5(4) pair.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (identical to the last tableau row, FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded fourth-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
/// Coefficients of the fourth-order continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 10.0;
const MAX_REJECTS: usize = 60;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_init: None,
            max_steps: 4_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        OdeOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }

    pub fn h_max(mut self, h: f64) -> Self {
        self.h_max = h;
        self
    }
}

/// One accepted step together with its interpolation polynomial.
///
/// The interpolant on `[t0, t0 + h]` is, per component,
/// `p(theta) = c0 + theta*(c1 + (1-theta)*(c2 + theta*(c3 + (1-theta)*c4)))`.
#[derive(Clone, Debug)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    cont: [[f64; 5]; N],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let mut out = [0.0; N];
        for i in 0..N {
            let c = &self.cont[i];
            out[i] = c[0] + theta * (c[1] + (1.0 - theta) * (c[2] + theta * (c[3] + (1.0 - theta) * c[4])));
        }
        out
    }

    /// Time derivative of the interpolant.
    fn eval_derivative(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let mut out = [0.0; N];
        for i in 0..N {
            let c = &self.cont[i];
            // p(th) = c0 + c1 th + c2 th(1-th) + c3 th^2(1-th) + c4 th^2(1-th)^2
            let dp = c[1]
                + c[2] * (1.0 - 2.0 * th)
                + c[3] * (2.0 * th - 3.0 * th * th)
                + c[4] * (2.0 * th - 6.0 * th * th + 4.0 * th * th * th);
            out[i] = dp / self.h;
        }
        out
    }
}

/// Dense solution of an initial value problem on `[t_start, t_end]`.
#[derive(Clone, Debug)]
pub struct DenseSolution<const N: usize> {
    steps: Vec<DenseStep<N>>,
    /// Accepted node times; `t_nodes.len() == steps.len() + 1`.
    t_nodes: Vec<f64>,
    y_nodes: Vec<[f64; N]>,
    t_end: f64,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.t_nodes[0]
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, &[f64; N])> {
        self.t_nodes.iter().copied().zip(self.y_nodes.iter())
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    fn step_index(&self, t: f64) -> usize {
        // partition_point returns the first node strictly greater than t
        let idx = self.t_nodes.partition_point(|&tn| tn <= t);
        idx.saturating_sub(1).min(self.steps.len() - 1)
    }

    /// Evaluate the solution; `t` is clamped to `[t_start, t_end]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let t = t.clamp(self.t_nodes[0], self.t_end);
        self.steps[self.step_index(t)].eval(t)
    }

    /// Evaluate the time derivative of the interpolant.
    pub fn eval_derivative(&self, t: f64) -> [f64; N] {
        let t = t.clamp(self.t_nodes[0], self.t_end);
        self.steps[self.step_index(t)].eval_derivative(t)
    }
}

/// Zero-crossing direction an event triggers on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Falling,
    Rising,
}

#[derive(Clone, Copy)]
pub struct EventSpec<'a, const N: usize> {
    pub g: &'a dyn Fn(f64, &[f64; N]) -> f64,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    Event(usize),
}

pub fn integrate<const N: usize>(
    rhs: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<DenseSolution<N>> {
    integrate_with_events(rhs, t0, y0, t_end, opts, &[]).map(|(s, _)| s)
}

/// Integrate, stopping early at the first event zero-crossing.
pub fn integrate_with_events<const N: usize>(
    rhs: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    events: &[EventSpec<'_, N>],
) -> Result<(DenseSolution<N>, StopReason)> {
    if !(t_end > t0) {
        return Err(Error::InvalidInput(format!(
            "integration span must be positive (t0 = {t0}, t_end = {t_end})"
        )));
    }
    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);

    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(&y, &k1, opts))
        .min(opts.h_max)
        .min(span);

    let mut steps: Vec<DenseStep<N>> = Vec::new();
    let mut t_nodes = vec![t0];
    let mut y_nodes = vec![y0];
    let mut event_signs: Vec<f64> = events.iter().map(|e| (e.g)(t0, &y0)).collect();

    let mut rejects = 0usize;
    for _ in 0..opts.max_steps {
        if t >= t_end {
            break;
        }
        h = h.min(t_end - t);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::IntegrationFailure {
                t,
                reason: "step size underflow".into(),
            });
        }

        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for j in 0..s {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * k[j][i];
                    }
                }
            }
            k[s] = rhs(t + C[s] * h, &ys);
        }

        let mut y5 = y;
        let mut y4 = y;
        for s in 0..7 {
            for i in 0..N {
                y5[i] += h * B5[s] * k[s][i];
                y4[i] += h * B4[s] * k[s][i];
            }
        }

        let mut err = 0.0f64;
        for i in 0..N {
            if !y5[i].is_finite() {
                return Err(Error::IntegrationFailure {
                    t,
                    reason: "non-finite state".into(),
                });
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max(((y5[i] - y4[i]) / sc).abs());
        }

        if err <= 1.0 {
            rejects = 0;
            // k[6] = f(t + h, y5) by FSAL
            let mut cont = [[0.0; 5]; N];
            for i in 0..N {
                let dy = y5[i] - y[i];
                let bspl = h * k[0][i] - dy;
                cont[i][0] = y[i];
                cont[i][1] = dy;
                cont[i][2] = bspl;
                cont[i][3] = dy - h * k[6][i] - bspl;
                cont[i][4] = h
                    * (D[0] * k[0][i]
                        + D[2] * k[2][i]
                        + D[3] * k[3][i]
                        + D[4] * k[4][i]
                        + D[5] * k[5][i]
                        + D[6] * k[6][i]);
            }
            let step = DenseStep { t0: t, h, cont };
            let t_new = t + h;

            // event check on this step
            let mut fired: Option<(usize, f64)> = None;
            for (ei, ev) in events.iter().enumerate() {
                let g0 = event_signs[ei];
                let g1 = (ev.g)(t_new, &y5);
                let crossed = match ev.direction {
                    Direction::Falling => g0 > 0.0 && g1 <= 0.0,
                    Direction::Rising => g0 < 0.0 && g1 >= 0.0,
                };
                if crossed {
                    let t_hit = locate_event(&step, ev, t, t_new);
                    if fired.map_or(true, |(_, th)| t_hit < th) {
                        fired = Some((ei, t_hit));
                    }
                }
                event_signs[ei] = g1;
            }

            if let Some((ei, t_hit)) = fired {
                let y_hit = step.eval(t_hit);
                steps.push(step);
                t_nodes.push(t_hit);
                y_nodes.push(y_hit);
                let sol = DenseSolution {
                    steps,
                    t_nodes,
                    y_nodes,
                    t_end: t_hit,
                };
                return Ok((sol, StopReason::Event(ei)));
            }

            steps.push(step);
            t = t_new;
            y = y5;
            k1 = k[6];
            t_nodes.push(t);
            y_nodes.push(y);
        } else {
            rejects += 1;
            if rejects > MAX_REJECTS {
                return Err(Error::IntegrationFailure {
                    t,
                    reason: "too many consecutive rejected steps".into(),
                });
            }
        }

        let scale = (SAFETY * err.max(1e-30).powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE);
        h = (h * scale).min(opts.h_max);
    }

    if t < t_end {
        return Err(Error::IntegrationFailure {
            t,
            reason: "maximum step count exceeded".into(),
        });
    }

    Ok((
        DenseSolution {
            steps,
            t_nodes,
            y_nodes,
            t_end,
        },
        StopReason::Completed,
    ))
}

fn initial_step<const N: usize>(y: &[f64; N], f: &[f64; N], opts: &OdeOptions) -> f64 {
    let mut ynorm = 0.0f64;
    let mut fnorm = 0.0f64;
    for i in 0..N {
        ynorm = ynorm.max(y[i].abs());
        fnorm = fnorm.max(f[i].abs());
    }
    if fnorm < 1e-12 {
        return 1e-3;
    }
    (0.01 * (ynorm.max(opts.atol / opts.rtol) / fnorm)).clamp(1e-8, 1e-2)
}

/// Bisection on the dense output; interpolant error is far below the
/// localization tolerance.
fn locate_event<const N: usize>(
    step: &DenseStep<N>,
    ev: &EventSpec<'_, N>,
    t_lo: f64,
    t_hi: f64,
) -> f64 {
    let target = |t: f64| (ev.g)(t, &step.eval(t));
    let mut lo = t_lo;
    let mut hi = t_hi;
    let g_lo = target(lo);
    // direction tells us which sign change to look for
    let want_neg = ev.direction == Direction::Falling;
    if (want_neg && g_lo <= 0.0) || (!want_neg && g_lo >= 0.0) {
        return lo;
    }
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = target(mid);
        let crossed = if want_neg { gm <= 0.0 } else { gm >= 0.0 };
        if crossed {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
