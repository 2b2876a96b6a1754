//! Gauss–Hermite quadrature (weight e^{−u²}) and small integration helpers.
//!
//! Rules are generated by the Golub–Welsch algorithm from the Jacobi matrix of
//! the Hermite recurrence and cached per order. Expectations against general
//! Gaussian envelopes N(c, LLᵀ) use the substitution x = c + √2·L·u, with all
//! accumulation done in log space so that steep log-densities cannot overflow.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::symmetrize;

/// One-dimensional Gauss–Hermite rule: nodes and weights for ∫ e^{−u²} f(u) du.
#[derive(Clone, Debug)]
pub struct HermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn build_rule(n: usize) -> HermiteRule {
    assert!(n >= 1);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let se = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let w = std::f64::consts::PI.sqrt() * se.eigenvectors[(0, j)].powi(2);
            (se.eigenvalues[j], w)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    HermiteRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Cached rule of order n.
pub fn hermite_rule(n: usize) -> &'static HermiteRule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static HermiteRule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(build_rule(n))))
}

/// Stable ln Σ exp(xᵢ).
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Iterate a d-dimensional tensor Gauss–Hermite grid of order n per axis,
/// calling `body(u, ln_weight)` with ln_weight = Σ ln wᵢ + ‖u‖² (the e^{‖u‖²}
/// factor cancels the Hermite weight so that `body` sees a plain dx rule).
fn tensor_foreach(dim: usize, n: usize, mut body: impl FnMut(&[f64], f64)) {
    let rule = hermite_rule(n);
    let ln_w: Vec<f64> = rule.weights.iter().map(|w| w.ln()).collect();
    let mut idx = vec![0usize; dim];
    let mut u = vec![0.0f64; dim];
    loop {
        let mut lw = 0.0;
        for k in 0..dim {
            let j = idx[k];
            u[k] = rule.nodes[j];
            lw += ln_w[j] + rule.nodes[j] * rule.nodes[j];
        }
        body(&u, lw);
        // odometer increment
        let mut k = 0;
        loop {
            if k == dim {
                return;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Result of a Gaussian-envelope moment pass.
#[derive(Clone, Debug)]
pub struct EnvelopeMoments {
    /// ln ∫ exp(ln_f(x)) dx
    pub log_mass: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Zeroth/first/second moments of the density exp(ln_f) integrated with a
/// tensor rule of order `n` against the envelope N(center, scale·scaleᵀ).
///
/// Accumulation is streaming with a running max shift, so no node storage is
/// needed and steep exponents stay in range.
pub fn envelope_moments(
    ln_f: &dyn Fn(&DVector<f64>) -> f64,
    center: &DVector<f64>,
    scale: &DMatrix<f64>,
    n: usize,
) -> EnvelopeMoments {
    let d = center.len();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut shift = f64::NEG_INFINITY;
    let mut s0 = 0.0f64;
    let mut s1 = DVector::<f64>::zeros(d);
    let mut s2 = DMatrix::<f64>::zeros(d, d);
    let mut x = DVector::<f64>::zeros(d);
    tensor_foreach(d, n, |u, lw| {
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                s += scale[(i, j)] * u[j];
            }
            x[i] = center[i] + sqrt2 * s;
        }
        let t = lw + ln_f(&x);
        if !t.is_finite() {
            return;
        }
        if t > shift {
            let r = if shift.is_finite() {
                (shift - t).exp()
            } else {
                0.0
            };
            s0 *= r;
            s1 *= r;
            s2 *= r;
            shift = t;
        }
        let w = (t - shift).exp();
        s0 += w;
        s1.axpy(w, &x, 1.0);
        s2.ger(w, &x, &x, 1.0);
    });
    let jac_ln =
        (d as f64) * sqrt2.ln() + scale.determinant().abs().max(f64::MIN_POSITIVE).ln();
    if s0 <= 0.0 || !shift.is_finite() {
        return EnvelopeMoments {
            log_mass: f64::NEG_INFINITY,
            mean: DVector::zeros(d),
            cov: DMatrix::zeros(d, d),
        };
    }
    let mean = &s1 / s0;
    let cov = symmetrize(&(s2 / s0 - &mean * mean.transpose()));
    EnvelopeMoments {
        log_mass: shift + s0.ln() + jac_ln,
        mean,
        cov,
    }
}

/// ln ∫ exp(ln_f(x)) dx with the same envelope convention as
/// [`envelope_moments`], without forming moments.
pub fn envelope_log_integral(
    ln_f: &dyn Fn(&DVector<f64>) -> f64,
    center: &DVector<f64>,
    scale: &DMatrix<f64>,
    n: usize,
) -> f64 {
    let d = center.len();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut terms: Vec<f64> = Vec::new();
    let mut x = DVector::<f64>::zeros(d);
    tensor_foreach(d, n, |u, lw| {
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                s += scale[(i, j)] * u[j];
            }
            x[i] = center[i] + sqrt2 * s;
        }
        let v = ln_f(&x);
        if v.is_finite() {
            terms.push(lw + v);
        }
    });
    log_sum_exp(&terms)
        + (d as f64) * sqrt2.ln()
        + scale.determinant().abs().max(f64::MIN_POSITIVE).ln()
}

/// Adaptive driver: runs `eval` at doubling orders until two consecutive
/// results agree to `rel_tol` (on the scale 1 + |previous|), returning the
/// last value, the residual |Δ| and the order reached.
pub fn adapt_orders(
    start: usize,
    doublings: usize,
    rel_tol: f64,
    mut eval: impl FnMut(usize) -> f64,
    what: &str,
) -> Result<(f64, f64, usize)> {
    let mut n = start;
    let mut prev = eval(n);
    for _ in 0..doublings {
        let next_n = n * 2;
        let cur = eval(next_n);
        let delta = (cur - prev).abs();
        if delta <= rel_tol * (1.0 + prev.abs()) {
            return Ok((cur, delta, next_n));
        }
        prev = cur;
        n = next_n;
    }
    Err(Error::QuadratureNoConvergence(format!(
        "{what}: no convergence after {doublings} doublings from order {start}"
    )))
}

/// Trapezoid rule on an arbitrary increasing grid.
pub fn trapezoid(ts: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(ts.len(), ys.len());
    let mut acc = 0.0;
    for k in 1..ts.len() {
        acc += 0.5 * (ys[k] + ys[k - 1]) * (ts[k] - ts[k - 1]);
    }
    acc
}

/// Composite Simpson on a non-uniform grid (quadratic fit per node triple),
/// falling back to a trapezoid on a trailing odd interval.
pub fn simpson_nonuniform(ts: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(ts.len(), ys.len());
    let n = ts.len();
    if n < 3 {
        return trapezoid(ts, ys);
    }
    let mut acc = 0.0;
    let mut k = 0;
    while k + 2 < n {
        let (h0, h1) = (ts[k + 1] - ts[k], ts[k + 2] - ts[k + 1]);
        let h = h0 + h1;
        // exact for quadratics through the three nodes
        acc += h / 6.0
            * ((2.0 - h1 / h0) * ys[k]
                + h * h / (h0 * h1) * ys[k + 1]
                + (2.0 - h0 / h1) * ys[k + 2]);
        k += 2;
    }
    if k + 1 < n {
        acc += 0.5 * (ys[n - 1] + ys[n - 2]) * (ts[n - 1] - ts[n - 2]);
    }
    acc
}
