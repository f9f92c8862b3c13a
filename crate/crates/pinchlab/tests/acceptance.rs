//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Tolerances are pinned in the assertions; the shipped model configurations
//! under configs/ are the fixtures.

use std::f64::consts::TAU;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pinchlab::comparison::{
    certify_metric_containment, certify_riccati_containment, comparison_constants,
    fit_hyperbolic_r, helper_inequality_reports, model_constants,
};
use pinchlab::compactification::{
    asymptote_gap, boundary_limit_point, check_buffer_containment, double_buffer, holder_certify,
    EssentialSubsetBoundary, SubsetConfig,
};
use pinchlab::comparison::ChartBoundConstants;
use pinchlab::distance::{geodesic_bvp_distance, hyperbolic_closed_form_distance};
use pinchlab::geodesic::{integrate_geodesic, GeodesicState};
use pinchlab::jacobi::{integrate_jacobi, JacobiState};
use pinchlab::riccati::integrate_riccati;
use pinchlab::warp::{solve_warp, FermiPoint, WarpedModel};
use pinchlab::ModelConfig;

const GRID: usize = 10_000;

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_model(name: &str) -> WarpedModel {
    let cfg = ModelConfig::from_path(&config_dir().join(name)).expect("config parses");
    let profile = cfg.pinching_profile().expect("profile valid");
    solve_warp(profile, cfg.f0, cfg.f0_prime, cfg.r_max).expect("warp solves")
}

fn load_subset(name: &str) -> EssentialSubsetBoundary {
    SubsetConfig::from_path(&config_dir().join(name))
        .expect("subset config parses")
        .boundary()
        .expect("boundary builds")
}

const MODELS: [&str; 5] = [
    "const_a1_b1.json",
    "hyperbolic_shifted.json",
    "cosine_a05_b2.json",
    "cosine_a05_b2_slope.json",
    "piecewise_a08_b125.json",
];

fn report(criterion: u32, label: &str, pass: bool, detail: String) {
    println!(
        "criterion {criterion:2} ({label}): {} [{detail}]",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_01_riccati_containment() {
    let mut worst = f64::INFINITY;
    for name in MODELS {
        let m = load_model(name);
        let shape = m.boundary_shape_eigenvalue();
        let mu0s = [0.0, m.profile.a, shape];
        // envelope constants wide enough for every tested initial condition
        let c = comparison_constants(mu0s.iter().copied().fold(shape, f64::max), 0.0, &m.profile)
            .unwrap();
        for mu0 in mu0s {
            let sol = integrate_riccati(&m.profile, mu0, m.r_max).unwrap();
            let row = certify_riccati_containment(&sol, &c, m.r_max, GRID);
            worst = worst.min(row.min_slack);
            assert_eq!(row.violated_count, 0, "{name} mu0 = {mu0}");
        }
    }
    report(
        1,
        "Riccati containment",
        worst >= -1e-9,
        format!("worst slack {worst:.3e} over 5 profiles x 3 initial conditions"),
    );
}

#[test]
fn criterion_02_metric_containment() {
    let mut worst = f64::INFINITY;
    for name in MODELS {
        let m = load_model(name);
        let c = model_constants(&m).unwrap();
        let row = certify_metric_containment(&m, &c, GRID);
        worst = worst.min(row.min_slack);
        assert_eq!(row.violated_count, 0, "{name}");
    }
    report(
        2,
        "metric containment",
        worst >= -1e-9,
        format!("worst relative slack {worst:.3e}"),
    );
}

#[test]
fn criterion_03_jacobi_growth() {
    let mut worst = f64::INFINITY;
    for name in MODELS {
        let m = load_model(name);
        let a = m.profile.a;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r0 = rng.gen_range(0.0..4.0);
            let j0 = rng.gen_range(0.1..2.0);
            let jd0 = rng.gen_range(0.0..1.0);
            let s0 = GeodesicState::from_launch_angle(&m, 0.0, r0, 0.0).unwrap();
            let t_end = (m.r_max - r0 - 0.5).min(15.0);
            let path = integrate_geodesic(&m, &s0, t_end).unwrap();
            let sol = integrate_jacobi(
                &m,
                &path,
                &JacobiState {
                    j: j0,
                    j_dot: jd0,
                    t: 0.0,
                },
            )
            .unwrap();
            for s in sol.nodes() {
                let bound = j0 * (a * s.t).cosh();
                worst = worst.min((s.j - bound) / bound);
            }
        }
    }

    // equality when k = a^2 and j'(0) = 0
    let m = load_model("const_a1_b1.json");
    let s0 = GeodesicState::from_launch_angle(&m, 0.0, 0.0, 0.0).unwrap();
    let path = integrate_geodesic(&m, &s0, 25.0).unwrap();
    let sol = integrate_jacobi(
        &m,
        &path,
        &JacobiState {
            j: 1.0,
            j_dot: 0.0,
            t: 0.0,
        },
    )
    .unwrap();
    let mut eq_err = 0.0f64;
    for i in 0..=250 {
        let t = 25.0 * i as f64 / 250.0;
        let exact = t.cosh();
        eq_err = eq_err.max((sol.eval(t).j - exact).abs() / exact);
    }
    report(
        3,
        "Jacobi growth",
        worst >= -1e-9 && eq_err <= 1e-9,
        format!("worst rel slack {worst:.3e}, equality error {eq_err:.3e}"),
    );
}

#[test]
fn criterion_04_hyperbolic_sandwich() {
    let mut detail = String::new();
    let mut pass = true;
    for name in ["cosine_a05_b2.json", "const_a1_b1.json"] {
        let m = load_model(name);
        let c = model_constants(&m).unwrap();
        let sw = fit_hyperbolic_r(&m, &c).unwrap();
        let r_lo = sw.r_shift + 1.5;
        let r_hi = (sw.r_shift + 8.0).min(m.r_max - 2.0);
        let max_sep = 0.4 * m.chart_radius() / m.f0;
        let pairs: Vec<(FermiPoint, FermiPoint)> = {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let mut out = Vec::new();
            let mut attempts = 0;
            while out.len() < 1000 && attempts < 8000 {
                attempts += 1;
                let p = FermiPoint::new(rng.gen_range(0.0..TAU), rng.gen_range(r_lo..r_hi));
                let q = FermiPoint::new(
                    p.theta + rng.gen_range(-max_sep..max_sep),
                    rng.gen_range(r_lo..r_hi),
                );
                out.push((p, q));
            }
            out
        };
        let results: Vec<(bool, bool)> = pairs
            .par_iter()
            .map(|&(p, q)| {
                let res = geodesic_bvp_distance(&m, p, q).unwrap();
                // the comparison needs the segment inside the chart collar
                let contained = res.min_r > sw.r_shift;
                let d_lo = sw.d_lower(&m, p, q);
                let d_hi = sw.d_upper(&m, p, q);
                let ok = d_lo <= res.length * (1.0 + 1e-9) + 1e-9
                    && res.length <= d_hi * (1.0 + 1e-9) + 1e-9;
                (contained, ok)
            })
            .collect();
        let contained = results.iter().filter(|r| r.0).count();
        let violations = results.iter().filter(|r| r.0 && !r.1).count();
        pass &= violations == 0 && contained >= 900;
        detail.push_str(&format!("{name}: R={:.3}, {contained}/1000 contained, {violations} violations; ", sw.r_shift));
    }
    report(4, "hyperbolic sandwich", pass, detail);
}

#[test]
fn criterion_05_distance_oracle() {
    let m = load_model("hyperbolic_shifted.json");
    // f = sinh(r + 1): polar closed form with shift r0 = 1
    let r0 = 1.0;
    let worst = (0..1000)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(500 + i as u64);
            let p = FermiPoint::new(rng.gen_range(0.0..TAU), rng.gen_range(0.5..12.0));
            let q = FermiPoint::new(
                p.theta + rng.gen_range(-1.2..1.2),
                rng.gen_range(0.5..12.0),
            );
            let exact =
                hyperbolic_closed_form_distance(1.0, (p.r + r0, p.theta), (q.r + r0, q.theta));
            let got = geodesic_bvp_distance(&m, p, q).unwrap().length;
            (got - exact).abs()
        })
        .reduce(|| 0.0, f64::max);
    report(
        5,
        "distance oracle",
        worst <= 1e-6,
        format!("max |bvp - closed form| = {worst:.3e} over 1000 pairs"),
    );
}

#[test]
fn criterion_06_ray_asymptotics() {
    let m = load_model("cosine_a05_b2.json");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_accel = f64::INFINITY;
    let mut worst_cauchy = 0.0f64;
    let mut cap_ok = true;
    let mut count = 0;
    while count < 100 {
        let r0 = rng.gen_range(0.3..1.5);
        let phi = if count % 5 == 0 {
            std::f64::consts::FRAC_PI_2
        } else {
            rng.gen_range(-1.3..1.3)
        };
        let s0 = GeodesicState::from_launch_angle(&m, rng.gen_range(0.0..TAU), r0, phi).unwrap();
        let t_end = 27.0;
        let path = integrate_geodesic(&m, &s0, t_end).unwrap();
        if path.clamped {
            continue;
        }
        count += 1;
        assert!(path.max_unit_speed_drift(&m) <= 1e-7);
        for i in 0..=200 {
            let t = path.t_end * i as f64 / 200.0;
            worst_accel = worst_accel.min(path.radial_acceleration(&m, t));
        }
        let gap = asymptote_gap(&m, &path, 50).unwrap();
        // convergence of |t - sigma_r(t)|: consecutive horizon values
        let off_far = *gap.radial_offset.last().unwrap();
        let off_mid = gap.radial_offset[gap.radial_offset.len() * 6 / 10];
        worst_cauchy = worst_cauchy.max((off_far - off_mid).abs());
        for (lb, cap) in gap.lateral_bound.iter().zip(gap.lateral_cap.iter()) {
            cap_ok &= lb <= cap;
        }
    }
    report(
        6,
        "ray asymptotics",
        worst_accel >= -1e-10 && worst_cauchy <= 1e-3 && cap_ok,
        format!(
            "min radial accel {worst_accel:.3e}, worst offset Cauchy gap {worst_cauchy:.3e}, caps hold: {cap_ok}"
        ),
    );
}

#[test]
fn criterion_07_boundary_map_stability() {
    let m = load_model("cosine_a05_b2.json");
    let wavy = load_subset("subset_wavy.json");
    let mut worst_excess = f64::NEG_INFINITY;
    let mut failures = 0;
    for i in 0..50 {
        let q = TAU * i as f64 / 50.0;
        let near = boundary_limit_point(&m, &wavy, q, 20.0).unwrap();
        let far = boundary_limit_point(&m, &wavy, q, 30.0).unwrap();
        let diff = (near.theta_inf - far.theta_inf).abs();
        let bound = near.tail_bound + far.tail_bound;
        if diff > bound {
            failures += 1;
        }
        worst_excess = worst_excess.max(diff - bound);
    }

    let circle = load_subset("subset_circle.json");
    let mut worst_identity = 0.0f64;
    for i in 0..50 {
        let q = TAU * i as f64 / 50.0;
        let lim = boundary_limit_point(&m, &circle, q, 25.0).unwrap();
        worst_identity = worst_identity.max((lim.theta_inf - q).abs());
    }
    report(
        7,
        "boundary-map stability",
        failures == 0 && worst_identity <= 1e-8,
        format!(
            "{failures} tail-bound failures (worst excess {worst_excess:.3e}), identity error {worst_identity:.3e}"
        ),
    );
}

#[test]
fn criterion_08_double_buffer() {
    let m = load_model("const_a1_b1.json");
    let c = model_constants(&m).unwrap();
    let sw = fit_hyperbolic_r(&m, &c).unwrap();
    let k = ChartBoundConstants::fit(&m, &c, &sw);
    let params = double_buffer(0.0, &k, &m).unwrap();
    let conditions = params.conditions_hold(&k);
    let containment = check_buffer_containment(&m, &params, 1000, 8).unwrap();
    report(
        8,
        "double buffer",
        conditions && containment.escapes == 0 && containment.failures == 0,
        format!(
            "eps={:.3e} delta={:.3} T_OB={:.3} T_IB={:.3}, {}/{} segments inside (worst min r {:.3})",
            params.epsilon,
            params.delta,
            params.t_ob,
            params.t_ib,
            containment.checked - containment.escapes,
            containment.checked,
            containment.min_r_worst
        ),
    );
}

#[test]
fn criterion_09_holder_certificate() {
    let m = load_model("cosine_a05_b2.json");
    let wavy = load_subset("subset_wavy.json");
    let cert = holder_certify(&m, &wavy, 10_000, 9).unwrap();
    let pinched_ok = cert.passed
        && (cert.alpha_target - 0.25).abs() < 1e-12
        && cert.max_violation <= 0.0
        && cert.stability_change <= 0.2
        && cert.alpha_hat >= 0.25;

    let control = load_model("const_a1_b1.json");
    let cert_control = holder_certify(&control, &wavy, 4000, 9).unwrap();
    let control_ok = cert_control.passed && (cert_control.alpha_target - 1.0).abs() < 1e-12;

    report(
        9,
        "Holder certificate",
        pinched_ok && control_ok,
        format!(
            "alpha=0.25: C={:.3}, stability {:.2}%, alpha_hat={:.3}; control alpha=1: C={:.3}, stability {:.2}%",
            cert.c_fitted,
            100.0 * cert.stability_change,
            cert.alpha_hat,
            cert_control.c_fitted,
            100.0 * cert_control.stability_change
        ),
    );
}

#[test]
fn criterion_10_helper_inequalities() {
    let rows = helper_inequality_reports(2000);
    let violations: usize = rows.iter().map(|r| r.violated_count).sum();
    let worst = rows.iter().map(|r| r.min_slack).fold(f64::INFINITY, f64::min);
    assert_eq!(rows.len(), 6);
    report(
        10,
        "helper inequalities",
        violations == 0,
        format!("6 inequalities, {violations} violations, worst slack {worst:.3e}"),
    );
}
