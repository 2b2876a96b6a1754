//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Criteria 4, 6 and 9 exercise the scenario runner and live in the CLI
//! crate's acceptance suite.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use stamlab::bounds::{matrix_gap, surrogate_covariance, thm5_coefficient, thm5_rhs};
use stamlab::entropy::{
    deficit_parts, relative_entropy_direct, relative_entropy_drift, relative_entropy_gamma,
};
use stamlab::diagnostics::run_checks;
use stamlab::linalg::symmetrize;
use stamlab::measures::Measure;
use stamlab::rng::substream;
use stamlab::simulate::{moment_curve, simulate_bridge, GridScheme, TimeGrid};
use stamlab::PotentialFamily;

fn gaussian1(v: f64) -> Measure {
    Measure::gaussian(DMatrix::from_element(1, 1, v)).unwrap()
}

fn verdict(n: u32, ok: bool, detail: &str) {
    println!(
        "[criterion {n}] {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_1_three_route_entropy_agreement() {
    let start = Instant::now();
    let m = gaussian1(2.0);
    let grid = TimeGrid::new(GridScheme::Geometric, 200, 1e-4).unwrap();
    let e = simulate_bridge(&m, &grid, 100_000, 20_260_809).unwrap();
    let c = moment_curve(&e);
    let expected = (2.0 - 1.0 - 2.0f64.ln()) / 2.0;

    let drift = relative_entropy_drift(&m, &c, &e).unwrap();
    let gamma = relative_entropy_gamma(&m, &c, &e).unwrap();
    let tol_drift = (2.0 * drift.stderr).max(1e-3);
    let tol_gamma = (2.0 * gamma.stderr).max(1e-3);
    let ok_drift = (drift.value - expected).abs() <= tol_drift;
    let ok_gamma = (gamma.value - expected).abs() <= tol_gamma;
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        1,
        ok_drift && ok_gamma && elapsed < 120.0,
        &format!(
            "drift {:.6} (tol {:.1e}), gamma {:.6} (tol {:.1e}) vs {:.6}; {elapsed:.1}s",
            drift.value, tol_drift, gamma.value, tol_gamma, expected
        ),
    );
}

#[test]
fn criterion_2_matrix_identity() {
    let start = Instant::now();
    let mut rng = substream(2020, 0);
    let mut worst = 0.0f64;
    for trial in 0..1000u32 {
        let d = 1 + (trial as usize % 8);
        let a = random_spd(&mut rng, d);
        let b = random_spd(&mut rng, d);
        let lambda = 0.1 + 0.8 * rng.random::<f64>();
        let (lhs, rhs) = matrix_gap(&a, &b, lambda).unwrap();
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        2,
        worst <= 1e-10 && elapsed < 60.0,
        &format!("worst relative gap {worst:.3e} over 1000 SPD pairs, dims 1-8; {elapsed:.1}s"),
    );
}

fn random_spd(rng: &mut stamlab::rng::SubRng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    symmetrize(&(&a * a.transpose() + DMatrix::<f64>::identity(d, d) * 0.05))
}

#[test]
fn criterion_3_gaussian_equality_cases() {
    let mut detail = String::new();
    let mut ok = true;
    for &s2 in &[0.5, 1.0, 2.0] {
        for d in [1usize, 2] {
            let m = Measure::gaussian(DMatrix::<f64>::identity(d, d) * s2).unwrap();
            // closed-form route
            let (_, _, _, deficit) = deficit_parts(&m, &m, 0.5).unwrap();
            ok &= deficit.abs() <= 1e-8;
            // Monte Carlo route: drift-energy marginals, exact convolution
            let grid = TimeGrid::new(GridScheme::Geometric, 120, 1e-4).unwrap();
            let ex = simulate_bridge(&m, &grid, 20_000, 100 + d as u64).unwrap();
            let ey = simulate_bridge(&m, &grid, 20_000, 200 + d as u64).unwrap();
            let (cx, cy) = (moment_curve(&ex), moment_curve(&ey));
            let dx = relative_entropy_drift(&m, &cx, &ex).unwrap();
            let dy = relative_entropy_drift(&m, &cy, &ey).unwrap();
            let eye = DMatrix::<f64>::identity(d, d);
            let dconv = relative_entropy_direct(
                &Measure::gaussian(m.covariance().clone()).unwrap(),
                &eye,
            )
            .unwrap();
            let mc = 0.5 * dx.value + 0.5 * dy.value - dconv.value;
            let budget = 0.5 * dx.budget() + 0.5 * dy.budget() + dconv.budget() + 1e-12;
            ok &= mc.abs() <= budget;
            detail.push_str(&format!(
                "σ²={s2} d={d}: closed {deficit:.1e}, mc {mc:.1e} (budget {budget:.1e}); "
            ));
        }
    }
    verdict(3, ok, &detail);
}

#[test]
fn criterion_5_identity_suite_on_quartic() {
    let start = Instant::now();
    let m = Measure::potential(
        PotentialFamily::Quartic {
            a: vec![1.0],
            b: vec![0.25],
        },
        None,
    )
    .unwrap()
    .with_xi(1.0)
    .unwrap();
    let grid = TimeGrid::new(GridScheme::Geometric, 160, 1e-4).unwrap();
    let e = simulate_bridge(&m, &grid, 100_000, 55).unwrap();
    let c = moment_curve(&e);
    let d = relative_entropy_direct(&m, &DMatrix::identity(1, 1)).unwrap();
    let checks = run_checks(&m, &e, &c, &d).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for name in ["drift-covariance-identity", "gamma-ode"] {
        let ch = checks.iter().find(|c| c.check_name == name).unwrap();
        ok &= ch.passed;
        detail.push_str(&format!("{name}: stat {:+.2e}; ", ch.statistic));
    }
    let elapsed = start.elapsed().as_secs_f64();
    detail.push_str(&format!("n=100000, {elapsed:.1}s"));
    verdict(5, ok, &detail);
}

#[test]
fn criterion_7_gaussian_surrogate_fixed_point() {
    let mut ok = true;
    let mut detail = String::new();
    let grid = TimeGrid::new(GridScheme::Geometric, 401, 1e-4).unwrap();
    for &s2 in &[0.5, 1.0, 2.0] {
        let m = gaussian1(s2);
        let e = simulate_bridge(&m, &grid, 200, 5).unwrap();
        let s = surrogate_covariance(&moment_curve(&e));
        let err = (s[(0, 0)] - s2).abs();
        ok &= err <= 1e-6;
        detail.push_str(&format!("σ²={s2}: |Δ|={err:.1e}; "));
    }
    let m2 = Measure::gaussian(DMatrix::from_diagonal(&DVector::from_vec(vec![1.5, 0.5])))
        .unwrap();
    let e2 = simulate_bridge(&m2, &grid, 200, 9).unwrap();
    let s2m = surrogate_covariance(&moment_curve(&e2));
    let err2 = (s2m - m2.covariance()).amax();
    ok &= err2 <= 1e-6;
    detail.push_str(&format!("2d diag: |Δ|={err2:.1e}"));
    verdict(7, ok, &detail);
}

#[test]
fn criterion_8_thm5_coefficient_and_bound() {
    // coefficient dominates λ(1−λ)/C_p on a (λ, C_p) grid with C_p ≥ 1
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for i in 1..20 {
        let lambda = i as f64 / 20.0;
        for j in 0..40 {
            let cp = 1.0 + j as f64 * 0.5;
            let gap = thm5_coefficient(lambda, cp) - lambda * (1.0 - lambda) / cp;
            worst = worst.min(gap);
            ok &= gap >= -1e-12;
        }
    }
    // and the bound certifies X = quartic vs G
    let q = Measure::potential(
        PotentialFamily::Quartic {
            a: vec![1.0],
            b: vec![0.05],
        },
        None,
    )
    .unwrap()
    .isotropized()
    .unwrap();
    let g = gaussian1(1.0);
    let eye = DMatrix::identity(1, 1);
    let dq = relative_entropy_direct(&q, &eye).unwrap();
    let mut detail = format!("min coefficient gap {worst:.2e}; ");
    for &lambda in &[0.1, 0.25, 0.5, 0.75, 0.9] {
        let b = thm5_rhs(&q, lambda, &dq).unwrap();
        let (_, _, dconv, deficit) = deficit_parts(&q, &g, lambda).unwrap();
        let budget = b.budget() + lambda * dq.budget() + dconv.budget() + 1e-9;
        ok &= b.rhs <= deficit + budget;
        detail.push_str(&format!("λ={lambda}: margin {:+.1e}; ", deficit - b.rhs));
    }
    verdict(8, ok, &detail);
}
