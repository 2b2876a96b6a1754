//! Relative entropies D(·‖N(0,S)) and the Shannon–Stam deficit, computed by
//! mutually checking routes:
//!
//!  * direct — adaptive tensor quadrature of ∫ p ln(p/q), or the closed form
//!    when the measure is Gaussian;
//!  * drift-energy — ½∫ E‖v_t‖² dt over an ensemble (the Girsanov identity);
//!  * gamma-identity — ½∫ Tr E[(Γ_t−I)²]/(1−t) dt over the same ensemble.
//!
//! The truncated [1−ε, 1] contribution of the two ensemble routes is bounded
//! through the martingale property of v_t: E‖v_t‖² increases to the relative
//! Fisher information E‖∇ln p(X)+X‖², so the missing mass is at most
//! (ε/2)·I(X‖G), which is estimated by Monte Carlo and reported as the
//! `tail_bound` term of the error budget.

use nalgebra::{DMatrix, DVector};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, gaussian_relative_entropy, spd_inverse, spd_log_det};
use crate::measures::{Measure, MeasureKind};
use crate::quad::{hermite_rule, simpson_nonuniform, trapezoid};
use crate::simulate::{MomentCurve, PathEnsemble};

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyRoute {
    DirectQuadrature,
    DriftEnergy,
    GammaIdentity,
    GaussianClosedForm,
}

/// A relative-entropy value with the estimator used and its error terms.
/// For quadrature routes `stderr` carries the final refinement residual.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub route: EntropyRoute,
    pub stderr: f64,
    #[serde(rename = "tailBound")]
    pub tail_bound: f64,
}

impl EntropyEstimate {
    /// 2·stderr + tail bound: the uniform error-budget convention.
    pub fn budget(&self) -> f64 {
        2.0 * self.stderr + self.tail_bound
    }

    /// Differential entropy derived from the relative form:
    /// h(X) = −D(X‖G) + Tr Cov(X)/2 + (d/2)·ln(2π) for centered X.
    pub fn differential_entropy(&self, trace_cov: f64, dim: usize) -> f64 {
        -self.value + 0.5 * trace_cov + 0.5 * dim as f64 * LN_2PI
    }
}

/// D(m ‖ N(0, ref_cov)): Gaussian closed form when available, otherwise
/// adaptive quadrature.
pub fn relative_entropy_direct(m: &Measure, ref_cov: &DMatrix<f64>) -> Result<EntropyEstimate> {
    if let MeasureKind::Gaussian { cov } = &m.kind {
        return Ok(EntropyEstimate {
            value: gaussian_relative_entropy(cov, ref_cov)?.max(0.0),
            route: EntropyRoute::GaussianClosedForm,
            stderr: 0.0,
            tail_bound: 0.0,
        });
    }
    relative_entropy_quadrature(m, ref_cov)
}

/// Forced quadrature route for D(m ‖ N(0, ref_cov)); the oracle behind the
/// closed forms. Potential kind requires dim ≤ 2, others dim ≤ 3.
pub fn relative_entropy_quadrature(m: &Measure, ref_cov: &DMatrix<f64>) -> Result<EntropyEstimate> {
    let d = m.dim;
    let limit = match m.kind {
        MeasureKind::Potential(_) => 2,
        _ => 3,
    };
    if d > limit {
        return Err(Error::UnnormalizedDensity(format!(
            "direct entropy quadrature limited to dim ≤ {limit} for this kind"
        )));
    }
    let (prec, _) = spd_inverse(ref_cov)?;
    let log_det = spd_log_det(ref_cov)?;
    let ln_q = move |x: &DVector<f64>| {
        let q = (x.transpose() * &prec * x)[(0, 0)];
        -0.5 * q - 0.5 * (d as f64 * LN_2PI + log_det)
    };
    let scale = cholesky(&(m.covariance() * 2.25))?;
    let pass = |n: usize| -> Result<f64> {
        let rule = hermite_rule(n);
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut acc = 0.0f64;
        let mut idx = vec![0usize; d];
        let mut x = DVector::<f64>::zeros(d);
        let mut u = vec![0.0f64; d];
        'outer: loop {
            let mut lw = 0.0;
            for k in 0..d {
                let j = idx[k];
                u[k] = rule.nodes[j];
                lw += rule.weights[j].ln() + rule.nodes[j] * rule.nodes[j];
            }
            for i in 0..d {
                let mut s = 0.0;
                for j in 0..d {
                    s += scale[(i, j)] * u[j];
                }
                x[i] = sqrt2 * s;
            }
            let lp = m.log_density(&x)?;
            let term = (lw + lp).exp() * (lp - ln_q(&x));
            if term.is_finite() {
                acc += term;
            }
            let mut k = 0;
            loop {
                if k == d {
                    break 'outer;
                }
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
        let jac = (2.0f64).powf(d as f64 / 2.0) * scale.determinant().abs();
        Ok(acc * jac)
    };
    let start = if d >= 3 { 24 } else { 32 };
    let doublings = if d >= 3 { 4 } else { 5 };
    let mut n = start;
    let mut prev = pass(n)?;
    for _ in 0..doublings {
        n *= 2;
        let cur = pass(n)?;
        let resid = (cur - prev).abs();
        if resid <= 1e-9 * (1.0 + cur.abs()) {
            return Ok(EntropyEstimate {
                value: cur.max(0.0),
                route: EntropyRoute::DirectQuadrature,
                stderr: resid,
                tail_bound: 0.0,
            });
        }
        prev = cur;
    }
    Err(Error::QuadratureNoConvergence(
        "direct relative entropy".into(),
    ))
}

/// Monte Carlo relative Fisher information E‖∇ln p(X) + X‖² with stderr.
pub fn fisher_information_mc(m: &Measure, n: usize, seed: u64) -> Result<(f64, f64)> {
    let xs = m.sample(n, seed)?;
    let vals: Vec<f64> = xs
        .iter()
        .map(|x| {
            let s = m.grad_log_density(x) + x;
            s.norm_squared()
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

fn check_ensemble(m: &Measure, e: &PathEnsemble) -> Result<()> {
    if e.measure_fingerprint != m.fingerprint() {
        return Err(Error::InvalidArgument(
            "ensemble was built from a different measure".into(),
        ));
    }
    Ok(())
}

fn tail_bound_from_fisher(m: &Measure, e: &PathEnsemble) -> Result<f64> {
    let n = e.n_paths.min(20_000).max(1_000);
    let (fisher, se) = fisher_information_mc(m, n, e.master_seed ^ 0xF15E)?;
    Ok(0.5 * e.grid.epsilon() * (fisher + 2.0 * se))
}

fn batch_integral_stderr(ts: &[f64], batch_curves: &[Vec<f64>]) -> f64 {
    let b = batch_curves.len();
    if b < 2 {
        return 0.0;
    }
    let ints: Vec<f64> = batch_curves.iter().map(|c| trapezoid(ts, c)).collect();
    let mean = ints.iter().sum::<f64>() / b as f64;
    let var = ints.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b as f64 * (b - 1) as f64);
    var.sqrt()
}

/// Drift-energy route: ½ ∫ E‖v_t‖² dt by trapezoid over the grid plus the
/// Fisher tail bound.
pub fn relative_entropy_drift(m: &Measure, curve: &MomentCurve, e: &PathEnsemble) -> Result<EntropyEstimate> {
    check_ensemble(m, e)?;
    let ts = &curve.ts;
    let ys: Vec<f64> = curve.nodes.iter().map(|nm| 0.5 * nm.e_vsq).collect();
    let value = trapezoid(ts, &ys);
    // grid-discretization residual, Richardson-style
    let integ_resid = (value - simpson_nonuniform(ts, &ys)).abs();
    let nb = curve.n_batches();
    let batch_curves: Vec<Vec<f64>> = (0..nb)
        .map(|b| curve.batches.iter().map(|nb_| 0.5 * nb_.vsq[b]).collect())
        .collect();
    let stderr = batch_integral_stderr(ts, &batch_curves);
    Ok(EntropyEstimate {
        value: value.max(0.0),
        route: EntropyRoute::DriftEnergy,
        stderr,
        tail_bound: tail_bound_from_fisher(m, e)? + integ_resid,
    })
}

/// Γ-identity route: ½ ∫ Tr E[(Γ_t − I)²]/(1−t) dt.
pub fn relative_entropy_gamma(m: &Measure, curve: &MomentCurve, e: &PathEnsemble) -> Result<EntropyEstimate> {
    check_ensemble(m, e)?;
    let d = curve.dim as f64;
    let ts = &curve.ts;
    let integrand = |g: &DMatrix<f64>, g2: &DMatrix<f64>, t: f64| {
        0.5 * (g2.trace() - 2.0 * g.trace() + d) / (1.0 - t)
    };
    let ys: Vec<f64> = curve
        .nodes
        .iter()
        .zip(ts)
        .map(|(nm, &t)| integrand(&nm.e_gamma, &nm.e_gamma_sq, t))
        .collect();
    let value = trapezoid(ts, &ys);
    let integ_resid = (value - simpson_nonuniform(ts, &ys)).abs();
    let nb = curve.n_batches();
    let batch_curves: Vec<Vec<f64>> = (0..nb)
        .map(|b| {
            curve
                .batches
                .iter()
                .zip(ts)
                .map(|(nb_, &t)| integrand(&nb_.gamma[b], &nb_.gamma_sq[b], t))
                .collect()
        })
        .collect();
    let stderr = batch_integral_stderr(ts, &batch_curves);
    Ok(EntropyEstimate {
        value: value.max(0.0),
        route: EntropyRoute::GammaIdentity,
        stderr,
        tail_bound: tail_bound_from_fisher(m, e)? + integ_resid,
    })
}

// ----- convolution of scaled measures ---------------------------------------

/// The law of √λ·X + √(1−λ)·Y as a measure when exact component algebra
/// applies (any Gaussian/Mixture combination).
fn convolve_exact(mx: &Measure, my: &Measure, lambda: f64) -> Result<Option<Measure>> {
    let to_parts = |m: &Measure, s: f64| -> Option<(Vec<f64>, Vec<DVector<f64>>, Vec<DMatrix<f64>>)> {
        match &m.kind {
            MeasureKind::Gaussian { cov } => Some((
                vec![1.0],
                vec![DVector::zeros(m.dim)],
                vec![cov * (s * s)],
            )),
            MeasureKind::Mixture {
                weights,
                means,
                covs,
            } => Some((
                weights.clone(),
                means.iter().map(|mu| mu * s).collect(),
                covs.iter().map(|c| c * (s * s)).collect(),
            )),
            MeasureKind::Potential(_) => None,
        }
    };
    let (wx, mux, cx) = match to_parts(mx, lambda.sqrt()) {
        Some(p) => p,
        None => return Ok(None),
    };
    let (wy, muy, cy) = match to_parts(my, (1.0 - lambda).sqrt()) {
        Some(p) => p,
        None => return Ok(None),
    };
    if wx.len() == 1 && wy.len() == 1 {
        return Ok(Some(Measure::gaussian(&cx[0] + &cy[0])?));
    }
    let mut weights = Vec::new();
    let mut comps = Vec::new();
    for i in 0..wx.len() {
        for j in 0..wy.len() {
            weights.push(wx[i] * wy[j]);
            comps.push((&mux[i] + &muy[j], &cx[i] + &cy[j]));
        }
    }
    // renormalize away accumulated rounding in the simplex
    let s: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= s;
    }
    Ok(Some(Measure::mixture(weights, comps)?))
}

/// D(√λX + √(1−λ)Y ‖ G) for one-dimensional pairs involving a potential:
/// densities on a common grid, FFT convolution, then grid integration.
fn conv_entropy_fft_1d(mx: &Measure, my: &Measure, lambda: f64) -> Result<EntropyEstimate> {
    let sx = lambda.sqrt();
    let sy = (1.0 - lambda).sqrt();
    // scaled densities: p_{sX}(u) = p_X(u/s)/s
    let dens = |m: &Measure, s: f64, u: f64| -> Result<f64> {
        if s < 1e-12 {
            return Ok(0.0);
        }
        let x = DVector::from_element(1, u / s);
        Ok((m.log_density(&x)?).exp() / s)
    };
    let sd = (lambda * mx.covariance()[(0, 0)] + (1.0 - lambda) * my.covariance()[(0, 0)]).sqrt();
    let half = 12.0 * sd.max(1.0);
    let run = |n: usize| -> Result<f64> {
        let h = 2.0 * half / (n - 1) as f64;
        let mut pa = vec![Complex::new(0.0, 0.0); 2 * n];
        let mut pb = vec![Complex::new(0.0, 0.0); 2 * n];
        for k in 0..n {
            let u = -half + k as f64 * h;
            pa[k] = Complex::new(dens(mx, sx, u)?, 0.0);
            pb[k] = Complex::new(dens(my, sy, u)?, 0.0);
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * n);
        let ifft = planner.plan_fft_inverse(2 * n);
        fft.process(&mut pa);
        fft.process(&mut pb);
        for (a, b) in pa.iter_mut().zip(&pb) {
            *a *= *b;
        }
        ifft.process(&mut pa);
        let scale = h / (2 * n) as f64;
        // sample index k corresponds to u = −2·half + k·h
        let mut acc = 0.0;
        for (k, c) in pa.iter().enumerate() {
            let p = (c.re * scale).max(0.0);
            if p <= 0.0 {
                continue;
            }
            let u = -2.0 * half + k as f64 * h;
            let lq = -0.5 * u * u - 0.5 * LN_2PI;
            acc += p * (p.ln() - lq) * h;
        }
        Ok(acc)
    };
    let mut n = 4096;
    let mut prev = run(n)?;
    for _ in 0..3 {
        n *= 2;
        let cur = run(n)?;
        let resid = (cur - prev).abs();
        if resid <= 1e-7 * (1.0 + cur.abs()) {
            return Ok(EntropyEstimate {
                value: cur.max(0.0),
                route: EntropyRoute::DirectQuadrature,
                stderr: resid,
                tail_bound: 0.0,
            });
        }
        prev = cur;
    }
    Err(Error::QuadratureNoConvergence("1d convolution entropy".into()))
}

/// Two-dimensional tensor-quadrature convolution entropy: the inner integral
/// forms ln p_conv pointwise, the outer integrates p_conv·ln(p_conv/γ).
fn conv_entropy_quad_2d(mx: &Measure, my: &Measure, lambda: f64) -> Result<EntropyEstimate> {
    let d = 2usize;
    let sx = lambda.sqrt();
    let sy = (1.0 - lambda).sqrt();
    if sx < 1e-9 || sy < 1e-9 {
        // one factor degenerates to a point mass: the sum is the other factor
        let (m, s) = if sx < 1e-9 { (my, sy) } else { (mx, sx) };
        let scaled = m.scale(s)?;
        return relative_entropy_quadrature(&scaled, &DMatrix::identity(2, 2));
    }
    let mxs = mx.scale(sx)?;
    let mys = my.scale(sy)?;
    // the product p_A(z−w)·p_B(w) peaks near the Gaussian-matched point
    // S_B(S_A+S_B)⁻¹z with curvature ≈ S_A⁻¹+S_B⁻¹
    let (sum_inv, _) = spd_inverse(&(mxs.covariance() + mys.covariance()))?;
    let inner_center_map = mys.covariance() * &sum_inv;
    let (prec_a, _) = spd_inverse(mxs.covariance())?;
    let (prec_b, _) = spd_inverse(mys.covariance())?;
    let inner_cov = spd_inverse(&(prec_a + prec_b))?.0;
    let inner_scale = cholesky(&(inner_cov * 2.25))?;
    let inner_n = 48;
    let ln_conv = |z: &DVector<f64>, n_inner: usize| -> f64 {
        let f = |w: &DVector<f64>| {
            let zz = z - w;
            mxs.log_density(&zz).unwrap_or(f64::NEG_INFINITY)
                + mys.log_density(w).unwrap_or(f64::NEG_INFINITY)
        };
        let center = &inner_center_map * z;
        crate::quad::envelope_log_integral(&f, &center, &inner_scale, n_inner)
    };
    let cov_sum = mxs.covariance() + mys.covariance();
    let outer_scale = cholesky(&(cov_sum * 2.25))?;
    let rule_pass = |n: usize, n_inner: usize| -> f64 {
        let rule = hermite_rule(n);
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut acc = 0.0;
        let mut z = DVector::<f64>::zeros(d);
        for (i, &ui) in rule.nodes.iter().enumerate() {
            for (j, &uj) in rule.nodes.iter().enumerate() {
                let lw = rule.weights[i].ln() + rule.weights[j].ln() + ui * ui + uj * uj;
                z[0] = sqrt2 * (outer_scale[(0, 0)] * ui + outer_scale[(0, 1)] * uj);
                z[1] = sqrt2 * (outer_scale[(1, 0)] * ui + outer_scale[(1, 1)] * uj);
                let lp = ln_conv(&z, n_inner);
                if !lp.is_finite() {
                    continue;
                }
                let lq = -0.5 * z.norm_squared() - 0.5 * 2.0 * LN_2PI;
                let term = (lw + lp).exp() * (lp - lq);
                if term.is_finite() {
                    acc += term;
                }
            }
        }
        acc * 2.0 * outer_scale.determinant().abs()
    };
    let a = rule_pass(32, inner_n);
    let b = rule_pass(48, inner_n);
    let c = rule_pass(64, 64);
    let resid = (c - b).abs().max((b - a).abs());
    if resid > 1e-4 * (1.0 + c.abs()) {
        return Err(Error::QuadratureNoConvergence(
            "2d convolution entropy".into(),
        ));
    }
    Ok(EntropyEstimate {
        value: c.max(0.0),
        route: EntropyRoute::DirectQuadrature,
        stderr: resid,
        tail_bound: 0.0,
    })
}

/// D(√λX + √(1−λ)Y ‖ G) via the best exact route available.
pub fn convolution_entropy(mx: &Measure, my: &Measure, lambda: f64) -> Result<EntropyEstimate> {
    if mx.dim != my.dim {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    if let Some(conv) = convolve_exact(mx, my, lambda)? {
        return relative_entropy_direct(&conv, &DMatrix::identity(conv.dim, conv.dim));
    }
    match mx.dim {
        1 => conv_entropy_fft_1d(mx, my, lambda),
        2 => conv_entropy_quad_2d(mx, my, lambda),
        _ => Err(Error::ConvolutionUnavailable(
            "potential-kind convolution needs dim ≤ 2".into(),
        )),
    }
}

/// λ·D(X‖G) + (1−λ)·D(Y‖G) − D(√λX+√(1−λ)Y‖G) with all three estimates.
pub fn deficit_parts(
    mx: &Measure,
    my: &Measure,
    lambda: f64,
) -> Result<(EntropyEstimate, EntropyEstimate, EntropyEstimate, f64)> {
    if !(0.0 < lambda && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda {lambda} outside (0,1)"
        )));
    }
    let eye = DMatrix::<f64>::identity(mx.dim, mx.dim);
    let d_x = relative_entropy_direct(mx, &eye)?;
    let d_y = relative_entropy_direct(my, &eye)?;
    let d_conv = convolution_entropy(mx, my, lambda)?;
    let deficit = lambda * d_x.value + (1.0 - lambda) * d_y.value - d_conv.value;
    Ok((d_x, d_y, d_conv, deficit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::PotentialFamily;
    use crate::simulate::{moment_curve, simulate_bridge, GridScheme, TimeGrid};
    use approx::assert_relative_eq;

    fn gaussian1(v: f64) -> Measure {
        Measure::gaussian(DMatrix::from_element(1, 1, v)).unwrap()
    }

    fn eye(d: usize) -> DMatrix<f64> {
        DMatrix::identity(d, d)
    }

    #[test]
    fn direct_entropy_examples() {
        // N(0,1) vs G = 0
        let e = relative_entropy_direct(&gaussian1(1.0), &eye(1)).unwrap();
        assert_eq!(e.route, EntropyRoute::GaussianClosedForm);
        assert!(e.value.abs() < 1e-14);

        // N(0,2) vs G: (σ²−1−lnσ²)/2
        let e = relative_entropy_direct(&gaussian1(2.0), &eye(1)).unwrap();
        assert_relative_eq!(e.value, 0.15342640972002736, epsilon = 1e-12);

        // quadrature path must reproduce the Gaussian closed form
        let q = relative_entropy_quadrature(&gaussian1(2.0), &eye(1)).unwrap();
        assert_eq!(q.route, EntropyRoute::DirectQuadrature);
        assert!((q.value - 0.15342640972002736).abs() < 1e-9);
    }

    #[test]
    fn mixture_vs_moment_matched_gaussian() {
        let m = Measure::mixture(
            vec![0.5, 0.5],
            vec![
                (
                    DVector::from_element(1, -1.0),
                    DMatrix::from_element(1, 1, 1.0),
                ),
                (
                    DVector::from_element(1, 1.0),
                    DMatrix::from_element(1, 1, 1.0),
                ),
            ],
        )
        .unwrap();
        let e = relative_entropy_quadrature(&m, &DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert!(e.value >= 0.0 && e.value <= 0.06, "{}", e.value);
        // brute-force oracle value
        assert!((e.value - 0.009742769933141).abs() < 1e-6, "{}", e.value);
    }

    #[test]
    fn drift_and_gamma_routes_match_closed_form() {
        let m = gaussian1(2.0);
        let grid = TimeGrid::new(GridScheme::Geometric, 120, 1e-4).unwrap();
        let e = simulate_bridge(&m, &grid, 20_000, 42).unwrap();
        let c = moment_curve(&e);
        let expected = 0.15342640972002736;

        let drift = relative_entropy_drift(&m, &c, &e).unwrap();
        assert!(
            (drift.value - expected).abs() < 3.0 * drift.stderr + 2e-3,
            "drift {} ± {}",
            drift.value,
            drift.stderr
        );

        let gamma = relative_entropy_gamma(&m, &c, &e).unwrap();
        // Γ is deterministic for Gaussians, so only integration error remains
        assert!(
            (gamma.value - expected).abs() < 1e-3,
            "gamma {}",
            gamma.value
        );
        assert!(gamma.tail_bound > 0.0 && gamma.tail_bound < 1e-3);
    }

    #[test]
    fn three_route_agreement_on_quartic() {
        let m = Measure::potential(
            PotentialFamily::Quartic {
                a: vec![1.0],
                b: vec![1.0],
            },
            None,
        )
        .unwrap();
        let direct = relative_entropy_direct(&m, &eye(1)).unwrap();
        let grid = TimeGrid::new(GridScheme::Geometric, 80, 1e-4).unwrap();
        let e = simulate_bridge(&m, &grid, 8_000, 7).unwrap();
        let c = moment_curve(&e);
        let drift = relative_entropy_drift(&m, &c, &e).unwrap();
        let gamma = relative_entropy_gamma(&m, &c, &e).unwrap();
        let budget = |a: &EntropyEstimate, b: &EntropyEstimate| a.budget() + b.budget() + 2e-3;
        assert!(
            (drift.value - direct.value).abs() <= budget(&drift, &direct),
            "drift {} vs direct {}",
            drift.value,
            direct.value
        );
        assert!(
            (gamma.value - direct.value).abs() <= budget(&gamma, &direct),
            "gamma {} vs direct {}",
            gamma.value,
            direct.value
        );
    }

    #[test]
    fn deficit_examples() {
        // equal Gaussian pairs: deficit vanishes identically
        for &s2 in &[0.5, 1.0, 2.0] {
            let m = gaussian1(s2);
            let (_, _, _, deficit) = deficit_parts(&m, &m, 0.37).unwrap();
            assert!(deficit.abs() < 1e-12, "s2={s2}: {deficit}");
        }

        // the anchor pair N(0,2), N(0,0.5) at λ = 1/2
        let (dx, dy, dconv, deficit) =
            deficit_parts(&gaussian1(2.0), &gaussian1(0.5), 0.5).unwrap();
        assert_relative_eq!(dx.value, 0.15342640972002736, epsilon = 1e-12);
        assert_relative_eq!(dy.value, 0.09657359027997264, epsilon = 1e-12);
        assert_relative_eq!(dconv.value, 0.013428224342895118, epsilon = 1e-12);
        assert_relative_eq!(deficit, 0.11157177565710488, epsilon = 1e-10);

        // λ → 0⁺ continuity
        let (_, _, _, tiny) = deficit_parts(&gaussian1(2.0), &gaussian1(0.5), 1e-6).unwrap();
        assert!(tiny.abs() <= 1e-4, "{tiny}");
    }

    #[test]
    fn mixture_convolution_uses_component_algebra() {
        let mix = Measure::mixture(
            vec![0.5, 0.5],
            vec![
                (
                    DVector::from_element(1, -1.0),
                    DMatrix::from_element(1, 1, 0.5),
                ),
                (
                    DVector::from_element(1, 1.0),
                    DMatrix::from_element(1, 1, 0.5),
                ),
            ],
        )
        .unwrap();
        let g = gaussian1(1.0);
        let (_, _, dconv, deficit) = deficit_parts(&mix, &g, 0.5).unwrap();
        assert!(dconv.value > 0.0);
        assert!(deficit >= -1e-9, "deficit {deficit}");
    }

    #[test]
    fn fft_convolution_matches_exact_algebra_on_gaussians() {
        // force the FFT path with Gaussian inputs and compare to closed form
        let mx = gaussian1(1.4);
        let my = gaussian1(0.8);
        let lambda = 0.35;
        let fft = conv_entropy_fft_1d(&mx, &my, lambda).unwrap();
        let exact = gaussian_relative_entropy(
            &DMatrix::from_element(1, 1, lambda * 1.4 + (1.0 - lambda) * 0.8),
            &eye(1),
        )
        .unwrap();
        assert!((fft.value - exact).abs() < 1e-6, "{} vs {exact}", fft.value);
    }

    #[test]
    fn quartic_deficit_nonnegative() {
        let q = Measure::potential(
            PotentialFamily::Quartic {
                a: vec![1.0],
                b: vec![0.25],
            },
            None,
        )
        .unwrap();
        let g = gaussian1(1.0);
        let (dx, _, dconv, deficit) = deficit_parts(&q, &g, 0.5).unwrap();
        assert!(dx.value > 0.0);
        assert!(dconv.value >= 0.0);
        let budget = dx.budget() + dconv.budget() + 1e-6;
        assert!(deficit >= -budget, "deficit {deficit}");
    }

    #[test]
    fn talagrand_sanity_for_gaussians() {
        // W₂²(X,G) ≤ 2D(X‖G) for Gaussian X
        for &s2 in &[0.3, 0.9, 1.7, 4.0] {
            let cov = DMatrix::from_element(1, 1, s2);
            let w2 = crate::linalg::gaussian_w2_squared(&cov, &eye(1)).unwrap();
            let d = gaussian_relative_entropy(&cov, &eye(1)).unwrap();
            assert!(w2 <= 2.0 * d + 1e-9, "s2={s2}: {w2} vs {d}");
        }
    }
}
