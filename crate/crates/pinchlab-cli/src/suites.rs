//! The verification suites behind the CLI subcommands. Every suite
//! implements [`Suite`] and sits in the registry; reports follow the column
//! contracts in docs/formats.md.

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ArgMatches;
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use pinchlab::comparison::{
    certify_metric_containment, certify_riccati_containment, certify_sandwich_pointwise,
    certify_shape_containment, comparison_constants, fit_hyperbolic_r, helper_inequality_reports,
    model_constants, CertRow, ChartBoundConstants,
};
use pinchlab::compactification::{
    boundary_limit_point, check_buffer_containment, check_convexity, double_buffer,
    holder_certify, EssentialSubsetBoundary, SubsetConfig,
};
use pinchlab::distance::{geodesic_bvp_distance, hyperbolic_closed_form_distance};
use pinchlab::geodesic::{integrate_geodesic, GeodesicState};
use pinchlab::jacobi::{integrate_jacobi, JacobiState};
use pinchlab::report::{cert_rows_csv, fmt_f64, write_json_atomic, CsvReport};
use pinchlab::riccati::integrate_riccati;
use pinchlab::warp::{FermiPoint, WarpedModel};
use pinchlab::{Error, ModelConfig, Result};

pub struct SuiteOutcome {
    pub passed: bool,
    pub headline: String,
}

pub trait Suite: Send + Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn needs_subset(&self) -> bool {
        false
    }
    fn default_samples(&self) -> &'static str {
        "1000"
    }
    fn run(&self, ctx: &RunContext) -> Result<SuiteOutcome>;
}

pub fn registry() -> &'static [Box<dyn Suite>] {
    static SUITES: Lazy<Vec<Box<dyn Suite>>> = Lazy::new(|| {
        vec![
            Box::new(WarpSolve),
            Box::new(VerifyComparison),
            Box::new(VerifyJacobi),
            Box::new(VerifyRiccati),
            Box::new(VerifySandwich),
            Box::new(BoundaryMap),
            Box::new(DoubleBuffer),
            Box::new(HolderCertify),
            Box::new(Distance),
        ]
    });
    &SUITES
}

pub struct RunContext {
    pub model: WarpedModel,
    pub model_path: PathBuf,
    pub subset: Option<EssentialSubsetBoundary>,
    pub out: PathBuf,
    pub seed: u64,
    pub samples: usize,
    pub grid: usize,
    pub r_target: Option<f64>,
    pub quiet: bool,
}

impl RunContext {
    pub fn build(m: &ArgMatches) -> Result<Self> {
        let model_path: PathBuf = m.get_one::<PathBuf>("model").expect("required").clone();
        let cfg = ModelConfig::from_path(&model_path)?;
        let profile = cfg.pinching_profile()?;
        let model = pinchlab::solve_warp(profile, cfg.f0, cfg.f0_prime, cfg.r_max)?;
        let subset = match m.get_one::<PathBuf>("subset") {
            Some(p) => Some(SubsetConfig::from_path(p)?.boundary()?),
            None => None,
        };
        Ok(RunContext {
            model,
            model_path,
            subset,
            out: m.get_one::<PathBuf>("out").expect("required").clone(),
            seed: *m.get_one::<u64>("seed").expect("default"),
            samples: (*m.get_one::<usize>("samples").expect("default")).max(1),
            grid: (*m.get_one::<usize>("grid").expect("default")).max(16),
            r_target: m.get_one::<f64>("r-target").copied(),
            quiet: m.get_flag("quiet"),
        })
    }

    pub fn csv_path(&self) -> PathBuf {
        self.out.with_extension("csv")
    }

    pub fn comments(&self, command: &str) -> Vec<String> {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        vec![
            format!("generated_unix: {now}"),
            format!("command: {command}"),
            format!("model: {}", self.model_path.display()),
            format!("seed: {}", self.seed),
            format!("samples: {}", self.samples),
            format!("grid: {}", self.grid),
        ]
    }

    fn subset(&self) -> Result<&EssentialSubsetBoundary> {
        self.subset
            .as_ref()
            .ok_or_else(|| Error::ConfigParse("this command requires --subset".into()))
    }
}

fn rows_pass(rows: &[CertRow]) -> bool {
    rows.iter().all(|r| r.passed())
}

fn worst_min_slack(rows: &[CertRow]) -> f64 {
    rows.iter().map(|r| r.min_slack).fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------

struct WarpSolve;

impl Suite for WarpSolve {
    fn name(&self) -> &'static str {
        "warp-solve"
    }
    fn about(&self) -> &'static str {
        "solve the warp ODE and emit the metric primitives on a grid"
    }
    fn run(&self, ctx: &RunContext) -> Result<SuiteOutcome> {
        let m = &ctx.model;
        let mut csv = CsvReport::new(&["r", "f", "f_prime", "k", "sec", "shape"]);
        for c in ctx.comments(self.name()) {
            csv.comment(c);
        }
        for i in 0..=ctx.grid {
            let r = m.r_max * i as f64 / ctx.grid as f64;
            let (f, fp) = m.warp(r)?;
            csv.row(vec![
                fmt_f64(r),
                fmt_f64(f),
                fmt_f64(fp),
                fmt_f64(m.profile.k(r)),
                fmt_f64(m.sectional_curvature_at(r)?),
                fmt_f64(m.shape_operator_at(r)?),
            ]);
        }
        csv.write_atomic(&ctx.csv_path())?;
        let (f_end, fp_end) = m.warp(m.r_max)?;
        write_json_atomic(
            &ctx.out,
            &json!({
                "a": m.profile.a,
                "b": m.profile.b,
                "profile_kind": m.profile.kind(),
                "f0": m.f0,
                "f0_prime": m.f0_prime,
                "r_max": m.r_max,
                "f_at_r_max": f_end,
                "f_prime_at_r_max": fp_end,
                "grid": ctx.grid,
                "passed": true,
            }),
        )?;
        Ok(SuiteOutcome {
            passed: true,
            headline: format!("f({}) = {:.6e}", m.r_max, f_end),
        })
    }
}

// ---------------------------------------------------------------------------

struct VerifyComparison;

impl Suite for VerifyComparison {
    fn name(&self) -> &'static str {
        "verify-comparison"
    }
    fn about(&self) -> &'static str {
        "certify shape/metric envelopes, the sandwich, chart bounds and helper inequalities"
    }
    fn run(&self, ctx: &RunContext) -> Result<SuiteOutcome> {
        let m = &ctx.model;
        let c = model_constants(m)?;
        let sw = fit_hyperbolic_r(m, &c)?;
        let k = ChartBoundConstants::fit(m, &c, &sw);
        let mut rows = vec![
            certify_shape_containment(m, &c, ctx.grid),
            certify_metric_containment(m, &c, ctx.grid),
            certify_sandwich_pointwise(m, &sw, ctx.grid),
        ];
        rows.extend(k.plane.certify());
        rows.extend(k.certify());
        rows.extend(helper_inequality_reports(400));
        let csv = cert_rows_csv(&rows, &ctx.comments(self.name()));
        csv.write_atomic(&ctx.csv_path())?;
        let passed = rows_pass(&rows);
        write_json_atomic(
            &ctx.out,
            &json!({
                "constants": {
                    "a": c.a, "b": c.b,
                    "shape_max": c.shape_max, "shape_min": c.shape_min,
                    "shape_max_prime": c.shape_max_prime, "shape_min_prime": c.shape_min_prime,
                    "l1": c.l1, "l2": c.l2, "l3": c.l3, "l4": c.l4,
                    "omega_max": c.omega_max, "omega_min": c.omega_min,
                },
                "sandwich_shift": sw.r_shift,
                "chart_constants": {
                    "c1": k.c1, "c2": k.c2, "c3": k.c3, "c4": k.c4,
                    "c5": k.c5, "c6": k.c6, "c7": k.c7, "c8": k.c8,
                    "lambda_metric": k.lambda_metric,
                    "plane": {
                        "c1": k.plane.c1, "c2": k.plane.c2, "c3": k.plane.c3,
                        "c4": k.plane.c4, "c5": k.plane.c5,
                    },
                },
                "inequalities": rows.len(),
                "worst_min_slack": worst_min_slack(&rows),
                "passed": passed,
            }),
        )?;
        Ok(SuiteOutcome {
            passed,
            headline: format!(
                "{} inequalities, worst slack {:.3e}",
                rows.len(),
                worst_min_slack(&rows)
            ),
        })
    }
}

// ---------------------------------------------------------------------------

struct VerifyJacobi;

impl Suite for VerifyJacobi {
    fn name(&self) -> &'static str {
        "verify-jacobi"
    }
    fn about(&self) -> &'static str {
        "check the growth bound j(t) >= j(0) cosh(a t) along normal geodesics"
    }
    fn default_samples(&self) -> &'static str {
        "100"
    }
    fn run(&self, ctx: &RunContext) -> Result<SuiteOutcome> {
        let m = &ctx.model;
        let a = m.profile.a;
        let mut csv = CsvReport::new(&["idx", "r0", "j0", "j_dot0", "min_rel_slack"]);
        for c in ctx.comments(self.name()) {
            csv.comment(c);
        }
        let mut worst = f64::INFINITY;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        for i in 0..ctx.samples {
            let r0 = rng.gen_range(0.0..(m.r_max - 16.0).max(0.5).min(5.0));
            let j0 = rng.gen_range(0.1..2.0);
            let jd0 = rng.gen_range(0.0..1.0);
            let s0 = GeodesicState::from_launch_angle(m, 0.0, r0, 0.0)?;
            let t_end = (m.r_max - r0 - 0.5).min(15.0);
            let path = integrate_geodesic(m, &s0, t_end)?;
            let sol = integrate_jacobi(
                m,
                &path,
                &JacobiState {
                    j: j0,
                    j_dot: jd0,
                    t: 0.0,
                },
            )?;
            let mut min_slack = f64::INFINITY;
            for s in sol.nodes() {
                let bound = j0 * (a * s.t).cosh();
                min_slack = min_slack.min((s.j - bound) / bound);
            }
            worst = worst.min(min_slack);
            csv.row(vec![
                i.to_string(),
                fmt_f64(r0),
                fmt_f64(j0),
                fmt_f64(jd0),
                fmt_f64(min_slack),
            ]);
        }
        csv.write_atomic(&ctx.csv_path())?;
        let passed = worst >= -1e-9;
        write_json_atomic(
            &ctx.out,
            &json!({
                "geodesics": ctx.samples,
                "worst_min_rel_slack": worst,
                "passed": passed,
            }),
        )?;
        Ok(SuiteOutcome {
            passed,
            headline: format!("worst relative slack {worst:.3e}"),
        })
    }
}

// ---------------------------------------------------------------------------

struct VerifyRiccati;

impl Suite for VerifyRiccati {
    fn name(&self) -> &'static str {
        "verify-riccati"
    }
    fn about(&self) -> &'static str {
        "certify the tanh/coth envelope for integrated Riccati solutions"
    }
    fn run(&self, ctx: &RunContext) -> Result<SuiteOutcome> {
        let m = &ctx.model;
        let shape = m.boundary_shape_eigenvalue();
        let mut mu0s = vec![0.0, m.profile.a, shape];
        mu0s.sort_by(f64::total_cmp);
        mu0s.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        // constants wide enough for every tested initial condition
        let c = comparison_constants(
            mu0s.iter().copied().fold(shape, f64::max),
            0.0,
            &m.profile,
        )?;
        let mut rows = Vec::new();
        for &mu0 in &mu0s {
            let sol = integrate_riccati(&m.profile, mu0, m.r_max)?;
            let mut row = certify_riccati_containment(&sol, &c, m.r_max, ctx.grid);
            row.inequality_id = format!("riccati_mu0_{mu0}");
            rows.push(row);
        }
        let csv = cert_rows_csv(&rows, &ctx.comments(self.name()));
        csv.write_atomic(&ctx.csv_path())?;
        let passed = rows_pass(&rows);
        write_json_atomic(
            &ctx.out,
            &json!({
                "mu0": mu0s.clone(),
                "l1": c.l1,
                "l2": c.l2,
                "worst_min_slack": worst_min_slack(&rows),
                "passed": passed,
            }),
        )?;
        Ok(SuiteOutcome {
            passed,
            headline: format!("max bound slack {:.3e}", worst_min_slack(&rows)),
        })
    }
}

// ---------------------------------------------------------------------------

struct VerifySandwich;

impl Suite for VerifySandwich {
    fn name(&self) -> &'static str {
        "verify-sandwich"
    }
    fn about(&self) -> &'static str {
        "fit the comparison shift R and check d_a <= d <= d_b on BVP pairs"
    }
    fn run(&self, ctx: &RunContext) -> Result<SuiteOutcome> {
        let m = &ctx.model;
        let c = model_constants(m)?;
        let sw = fit_hyperbolic_r(m, &c)?;
        let pointwise = certify_sandwich_pointwise(m, &sw, ctx.grid);

        let mut csv = CsvReport::new(&[
            "theta_p", "r_p", "theta_q", "r_q", "d_lower", "length", "d_upper", "min_r",
            "contained",
        ]);
        for cm in ctx.comments(self.name()) {
            csv.comment(cm);
        }
        let r_lo = sw.r_shift + 1.5;
        let r_hi = (sw.r_shift + 8.0).min(m.r_max - 2.0);
        if r_hi <= r_lo {
            return Err(Error::InvalidInput(format!(
                "no sampling band above R = {} inside r_max = {}",
                sw.r_shift, m.r_max
            )));
        }
        let max_sep = 0.45 * m.chart_radius() / m.f0;
        let mut violations = 0usize;
        let mut contained = 0usize;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        for _ in 0..ctx.samples {
            let p = FermiPoint::new(rng.gen_range(0.0..TAU), rng.gen_range(r_lo..r_hi));
            let q = FermiPoint::new(
                p.theta + rng.gen_range(-max_sep..max_sep),
                rng.gen_range(r_lo..r_hi),
            );
            let res = geodesic_bvp_distance(m, p, q)?;
            let inside = res.min_r > sw.r_shift;
            let d_lo = sw.d_lower(m, p, q);
            let d_hi = sw.d_upper(m, p, q);
            let ok = !inside
                || (d_lo <= res.length * (1.0 + 1e-9) + 1e-9
                    && res.length <= d_hi * (1.0 + 1e-9) + 1e-9);
            if inside {
                contained += 1;
                if !ok {
                    violations += 1;
                }
            }
            csv.row(vec![
                fmt_f64(p.theta),
                fmt_f64(p.r),
                fmt_f64(q.theta),
                fmt_f64(q.r),
                fmt_f64(d_lo),
                fmt_f64(res.length),
                fmt_f64(d_hi),
                fmt_f64(res.min_r),
                (inside as u8).to_string(),
            ]);
        }
        csv.write_atomic(&ctx.csv_path())?;
        let passed = pointwise.passed() && violations == 0 && contained * 2 >= ctx.samples;
        write_json_atomic(
            &ctx.out,
            &json!({
                "r_shift": sw.r_shift,
                "pointwise_min_slack": pointwise.min_slack,
                "pairs": ctx.samples,
                "contained": contained,
                "violations": violations,
                "passed": passed,
            }),
        )?;
        Ok(SuiteOutcome {
            passed,
            headline: format!(
                "R = {:.4}, {contained} contained pairs, {violations} violations",
                sw.r_shift
            ),
        })
    }
}

// ---------------------------------------------------------------------------

struct BoundaryMap;

impl Suite for BoundaryMap {
    fn name(&self) -> &'static str {
        "boundary-map"
    }
    fn about(&self) -> &'static str {
        "boundary correspondence at two horizons with truncation tail bounds"
    }
    fn needs_subset(&self) -> bool {
        true
    }
    fn default_samples(&self) -> &'static str {
        "50"
    }
    fn run(&self, ctx: &RunContext) -> Result<SuiteOutcome> {
        let m = &ctx.model;
        let subset = ctx.subset()?;
        let convexity = check_convexity(subset, m)?;
        let r_far = ctx.r_target.unwrap_or((m.r_max).min(30.0));
        let r_near = r_far - 10.0;
        if r_near <= subset.rho_max() + 1.0 {
            return Err(Error::InvalidInput(format!(
                "horizons {r_near}/{r_far} too close to the boundary (rho_max = {})",
                subset.rho_max()
            )));
        }
        let mut csv = CsvReport::new(&[
            "q_prime", "theta_near", "tail_near", "theta_far", "tail_far", "diff", "bound", "ok",
        ]);
        for cm in ctx.comments(self.name()) {
            csv.comment(cm);
        }
        let mut worst_excess = f64::NEG_INFINITY;
        let mut failures = 0usize;
        for i in 0..ctx.samples {
            let q = TAU * i as f64 / ctx.samples as f64;
            let near = boundary_limit_point(m, subset, q, r_near)?;
            let far = boundary_limit_point(m, subset, q, r_far)?;
            let diff = (near.theta_inf - far.theta_inf).abs();
            let bound = near.tail_bound + far.tail_bound;
            let ok = diff <= bound;
            if !ok {
                failures += 1;
            }
            worst_excess = worst_excess.max(diff - bound);
            csv.row(vec![
                fmt_f64(q),
                fmt_f64(near.theta_inf),
                fmt_f64(near.tail_bound),
                fmt_f64(far.theta_inf),
                fmt_f64(far.tail_bound),
                fmt_f64(diff),
                fmt_f64(bound),
                (ok as u8).to_string(),
            ]);
        }
        csv.write_atomic(&ctx.csv_path())?;
        let passed = failures == 0 && convexity.convex;
        write_json_atomic(
            &ctx.out,
            &json!({
                "convex": convexity.convex,
                "r_near": r_near,
                "r_far": r_far,
                "points": ctx.samples,
                "failures": failures,
                "worst_excess": worst_excess,
                "passed": passed,
            }),
        )?;
        Ok(SuiteOutcome {
            passed,
            headline: format!("{failures} horizon mismatches over {} points", ctx.samples),
        })
    }
}

// ---------------------------------------------------------------------------

struct DoubleBuffer;

impl Suite for DoubleBuffer {
    fn name(&self) -> &'static str {
        "double-buffer"
    }
    fn about(&self) -> &'static str {
        "emit buffer parameters and verify segment containment on IB pairs"
    }
    fn run(&self, ctx: &RunContext) -> Result<SuiteOutcome> {
        let m = &ctx.model;
        let c = model_constants(m)?;
        let sw = fit_hyperbolic_r(m, &c)?;
        let k = ChartBoundConstants::fit(m, &c, &sw);
        let params = double_buffer(0.0, &k, m)?;
        let conds = params.condition_values(&k);
        let conditions_hold = params.conditions_hold(&k);
        let containment = check_buffer_containment(m, &params, ctx.samples, ctx.seed)?;

        let mut csv = CsvReport::new(&["condition_id", "value", "bound", "ok"]);
        for cm in ctx.comments(self.name()) {
            csv.comment(cm);
        }
        let ids = [
            "chart_containment",
            "t_ob_floor",
            "t_ob_ceiling",
            "t_ib_floor",
        ];
        for (i, (v, b)) in conds.iter().enumerate() {
            let ok = if i == 2 { v < b } else { v <= b };
            csv.row(vec![
                ids[i].to_string(),
                fmt_f64(*v),
                fmt_f64(*b),
                (ok as u8).to_string(),
            ]);
        }
        csv.write_atomic(&ctx.csv_path())?;
        let passed = conditions_hold && containment.escapes == 0 && containment.failures == 0;
        write_json_atomic(
            &ctx.out,
            &json!({
                "epsilon": params.epsilon,
                "delta": params.delta,
                "t_ob": params.t_ob,
                "t_ib": params.t_ib,
                "center": params.center,
                "conditions_hold": conditions_hold,
                "pairs_checked": containment.checked,
                "escapes": containment.escapes,
                "solver_failures": containment.failures,
                "min_r_worst": containment.min_r_worst,
                "passed": passed,
            }),
        )?;
        Ok(SuiteOutcome {
            passed,
            headline: format!(
                "eps = {:.3e}, T_OB = {:.3}, T_IB = {:.3}, {} escapes",
                params.epsilon, params.t_ob, params.t_ib, containment.escapes
            ),
        })
    }
}

// ---------------------------------------------------------------------------

struct HolderCertify;

impl Suite for HolderCertify {
    fn name(&self) -> &'static str {
        "holder-certify"
    }
    fn about(&self) -> &'static str {
        "certify d_K2 <= C d_K1^{a/b} on stratified pairs near infinity"
    }
    fn needs_subset(&self) -> bool {
        true
    }
    fn default_samples(&self) -> &'static str {
        "10000"
    }
    fn run(&self, ctx: &RunContext) -> Result<SuiteOutcome> {
        let m = &ctx.model;
        let subset = ctx.subset()?;
        let cert = holder_certify(m, subset, ctx.samples, ctx.seed)?;

        let mut csv = CsvReport::new(&["theta_p", "r_p", "theta_q", "r_q", "dK1", "dK2", "ratio"]);
        for cm in ctx.comments(self.name()) {
            csv.comment(cm);
        }
        for s in &cert.samples {
            csv.row(vec![
                fmt_f64(s.theta_p),
                fmt_f64(s.r_p),
                fmt_f64(s.theta_q),
                fmt_f64(s.r_q),
                fmt_f64(s.d_k1),
                fmt_f64(s.d_k2),
                fmt_f64(s.ratio),
            ]);
        }
        csv.write_atomic(&ctx.csv_path())?;
        write_json_atomic(
            &ctx.out,
            &json!({
                "alpha_target": cert.alpha_target,
                "c_fitted": cert.c_fitted,
                "n_samples": cert.n_samples,
                "max_violation": cert.max_violation,
                "t_special": cert.t_special,
                "alpha_hat": cert.alpha_hat,
                "c_case1": cert.c_case1,
                "c_case2": cert.c_case2,
                "c_boundary": cert.c_boundary,
                "c_half_sample": cert.c_half,
                "stability_change": cert.stability_change,
                "passed": cert.passed,
            }),
        )?;
        Ok(SuiteOutcome {
            passed: cert.passed,
            headline: format!(
                "alpha = {:.4}, C = {:.4}, stability {:.1}%",
                cert.alpha_target,
                cert.c_fitted,
                100.0 * cert.stability_change
            ),
        })
    }
}

// ---------------------------------------------------------------------------

struct Distance;

impl Suite for Distance {
    fn name(&self) -> &'static str {
        "distance"
    }
    fn about(&self) -> &'static str {
        "BVP distance self-checks: closed-form oracle (constant curvature) and symmetry"
    }
    fn run(&self, ctx: &RunContext) -> Result<SuiteOutcome> {
        let m = &ctx.model;
        let oracle = constant_curvature_oracle(m);
        let mut csv = CsvReport::new(&[
            "theta_p", "r_p", "theta_q", "r_q", "length", "closed_form", "abs_err", "sym_err",
        ]);
        for cm in ctx.comments(self.name()) {
            csv.comment(cm);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let r_hi = (m.r_max - 2.0).min(12.0);
        let mut worst_abs = 0.0f64;
        let mut worst_sym = 0.0f64;
        for _ in 0..ctx.samples {
            let p = FermiPoint::new(rng.gen_range(0.0..TAU), rng.gen_range(0.5..r_hi));
            let q = FermiPoint::new(
                p.theta + rng.gen_range(-1.2..1.2),
                rng.gen_range(0.5..r_hi),
            );
            let res = geodesic_bvp_distance(m, p, q)?;
            let back = geodesic_bvp_distance(m, q, p)?;
            let sym = (res.length - back.length).abs();
            worst_sym = worst_sym.max(sym);
            let (exact, err) = match &oracle {
                Some(o) => {
                    let d = o.eval(m, p, q);
                    (d, (res.length - d).abs())
                }
                None => (f64::NAN, f64::NAN),
            };
            if err.is_finite() {
                worst_abs = worst_abs.max(err);
            }
            csv.row(vec![
                fmt_f64(p.theta),
                fmt_f64(p.r),
                fmt_f64(q.theta),
                fmt_f64(q.r),
                fmt_f64(res.length),
                fmt_f64(exact),
                fmt_f64(err),
                fmt_f64(sym),
            ]);
        }
        csv.write_atomic(&ctx.csv_path())?;
        let passed = worst_sym <= 1e-8 && (oracle.is_none() || worst_abs <= 1e-6);
        write_json_atomic(
            &ctx.out,
            &json!({
                "pairs": ctx.samples,
                "closed_form": oracle.as_ref().map(|o| o.describe()),
                "worst_abs_err": if oracle.is_some() { worst_abs } else { f64::NAN },
                "worst_symmetry_err": worst_sym,
                "passed": passed,
            }),
        )?;
        Ok(SuiteOutcome {
            passed,
            headline: match oracle {
                Some(_) => format!("max |bvp - exact| = {worst_abs:.3e}"),
                None => format!("max symmetry error = {worst_sym:.3e}"),
            },
        })
    }
}

/// Closed-form distance for constant-curvature warps: polar form when
/// f'(0)^2 - lambda^2 f(0)^2 = 1, cylinder form when it is negative.
enum CurvatureOracle {
    Polar { lambda: f64, r0: f64 },
    Cylinder { lambda: f64, waist: f64, shift: f64 },
}

impl CurvatureOracle {
    fn describe(&self) -> String {
        match self {
            CurvatureOracle::Polar { lambda, r0 } => format!("polar(lambda={lambda}, r0={r0})"),
            CurvatureOracle::Cylinder { lambda, waist, shift } => {
                format!("cylinder(lambda={lambda}, waist={waist}, shift={shift})")
            }
        }
    }

    fn eval(&self, _m: &WarpedModel, p: FermiPoint, q: FermiPoint) -> f64 {
        match *self {
            CurvatureOracle::Polar { lambda, r0 } => hyperbolic_closed_form_distance(
                lambda,
                (p.r + r0, p.theta),
                (q.r + r0, q.theta),
            ),
            CurvatureOracle::Cylinder { lambda, waist, shift } => {
                // distance over a base geodesic of circumference 2 pi waist:
                // cosh(l d) = cosh(l u) cosh(l u') cosh(l dx) - sinh(l u) sinh(l u')
                let raw = (p.theta - q.theta).rem_euclid(TAU);
                let dx = waist * raw.min(TAU - raw);
                let (u, v) = (p.r + shift, q.r + shift);
                let arg = (lambda * u).cosh() * (lambda * v).cosh() * (lambda * dx).cosh()
                    - (lambda * u).sinh() * (lambda * v).sinh();
                arg.max(1.0).acosh() / lambda
            }
        }
    }
}

fn constant_curvature_oracle(m: &WarpedModel) -> Option<CurvatureOracle> {
    if m.profile.kind() != "constant" {
        return None;
    }
    let lambda = m.profile.k(0.0).sqrt();
    let disc = m.f0_prime * m.f0_prime - lambda * lambda * m.f0 * m.f0;
    if (disc - 1.0).abs() < 1e-9 {
        let r0 = (lambda * m.f0).asinh() / lambda;
        Some(CurvatureOracle::Polar { lambda, r0 })
    } else if disc < -1e-12 {
        let waist = (-disc).sqrt() / lambda;
        // f = waist cosh(lambda (r + shift)) with tanh(lambda shift) = f0'/(lambda f0)
        let shift = (m.f0_prime / (lambda * m.f0)).atanh() / lambda;
        Some(CurvatureOracle::Cylinder {
            lambda,
            waist,
            shift,
        })
    } else {
        None
    }
}
