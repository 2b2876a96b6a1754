//! Conditional law of the terminal point given the process at time t, its
//! moments, the normalized conditional covariance Γ_t, and the drift.
//!
//! With X_t = t·X₁ + √(t(1−t))·G, Bayes' rule gives the conditional density
//! of X₁ at y proportional to p(y)·exp(⟨x,y⟩/(1−t) − t‖y‖²/(2(1−t))); that
//! stabilized exponent is regular on all of [0,1), reducing to an exponential
//! tilt at t = 0 (and to the plain prior at the process start x = 0). The
//! drift is (mean − x)/(1−t) and Γ_t = cov/(1−t).
//!
//! `heat_loggrad` recomputes the drift as the gradient of the log of the
//! Gaussian-smoothed relative density, by quadrature plus central finite
//! differences; it is kept independent of the moment path on purpose, as the
//! cross-check oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, spd_inverse, spd_log_det, sym_func, symmetrize};
use crate::measures::{Measure, MeasureKind, PotentialFamily};
use crate::quad::{envelope_moments, hermite_rule, log_sum_exp};

/// Moments of the conditional law of the terminal point given X_t = x.
#[derive(Clone, Debug)]
pub struct PosteriorStats {
    pub t: f64,
    pub x: DVector<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Γ_t = cov/(1−t).
    pub gamma: DMatrix<f64>,
    /// v_t = (mean − x)/(1−t).
    pub drift: DVector<f64>,
    /// ln ∫ of the unnormalized conditional density.
    pub log_mass: f64,
}

fn finalize(t: f64, x: DVector<f64>, mean: DVector<f64>, cov: DMatrix<f64>, log_mass: f64) -> PosteriorStats {
    let mut cov = symmetrize(&cov);
    if min_eigenvalue(&cov) < 0.0 {
        cov = sym_func(&cov, |l| l.max(0.0));
    }
    let gamma = &cov / (1.0 - t);
    let drift = (&mean - &x) / (1.0 - t);
    PosteriorStats {
        t,
        x,
        mean,
        cov,
        gamma,
        drift,
        log_mass,
    }
}

/// Moments of X₁ | X_t = x.
pub fn posterior_moments(m: &Measure, t: f64, x: &DVector<f64>) -> Result<PosteriorStats> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::TimeOutOfRange(t));
    }
    if x.len() != m.dim {
        return Err(Error::InvalidArgument("state dimension mismatch".into()));
    }
    let alpha = t / (1.0 - t);
    let b = x / (1.0 - t);
    match &m.kind {
        MeasureKind::Gaussian { cov } => {
            let prec = spd_inverse(cov)?.0;
            gaussian_conjugate(m.dim, t, x, &prec, spd_log_det(cov)?, &DVector::zeros(m.dim), alpha, &b, 0.0)
        }
        MeasureKind::Mixture {
            weights,
            means,
            covs,
        } => {
            let d = m.dim;
            let mut stats = Vec::with_capacity(weights.len());
            let mut log_masses = Vec::with_capacity(weights.len());
            for i in 0..weights.len() {
                if weights[i] == 0.0 {
                    continue;
                }
                let prec = spd_inverse(&covs[i])?.0;
                let comp = gaussian_conjugate(
                    d,
                    t,
                    x,
                    &prec,
                    spd_log_det(&covs[i])?,
                    &means[i],
                    alpha,
                    &b,
                    weights[i].ln(),
                )?;
                log_masses.push(comp.log_mass);
                stats.push(comp);
            }
            let lse = log_sum_exp(&log_masses);
            let mut mean = DVector::<f64>::zeros(d);
            let mut second = DMatrix::<f64>::zeros(d, d);
            let mut wsum = 0.0;
            for (lm, s) in log_masses.iter().zip(&stats) {
                let w = (lm - lse).exp();
                wsum += w;
                mean.axpy(w, &s.mean, 1.0);
                second += w * (&s.cov + &s.mean * s.mean.transpose());
            }
            // renormalize: huge log-masses near t = 1 leave rounding in wsum
            mean /= wsum;
            second /= wsum;
            let cov = &second - &mean * mean.transpose();
            Ok(finalize(t, x.clone(), mean, cov, lse))
        }
        MeasureKind::Potential(_) => {
            if m.dim == 1 {
                potential_posterior_1d(m, t, x)
            } else if m.dim == 2 {
                potential_posterior_nd(m, t, x, alpha, &b)
            } else {
                Err(Error::InvalidArgument(
                    "potential posterior supports dim ≤ 2".into(),
                ))
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn gaussian_conjugate(
    d: usize,
    t: f64,
    x: &DVector<f64>,
    prior_prec: &DMatrix<f64>,
    prior_log_det: f64,
    prior_mean: &DVector<f64>,
    alpha: f64,
    b: &DVector<f64>,
    log_weight: f64,
) -> Result<PosteriorStats> {
    let mut p = prior_prec.clone();
    for i in 0..d {
        p[(i, i)] += alpha;
    }
    let (c, _) = spd_inverse(&p)?;
    let rhs = prior_prec * prior_mean + b;
    let mean = &c * &rhs;
    let quad_new = (rhs.transpose() * &mean)[(0, 0)];
    let quad_old = (prior_mean.transpose() * prior_prec * prior_mean)[(0, 0)];
    let log_mass = log_weight + 0.5 * (quad_new - quad_old) - 0.5 * (spd_log_det(&p)? + prior_log_det);
    Ok(finalize(t, x.clone(), mean, c, log_mass))
}

// ----- potential posteriors -------------------------------------------------

struct Pot1d {
    lin: f64,
    shift: f64,
    a: f64,
    b4: f64,
}

impl Pot1d {
    fn from(m: &Measure) -> Option<Pot1d> {
        match &m.kind {
            MeasureKind::Potential(spec) => match &spec.family {
                PotentialFamily::Quartic { a, b } if a.len() == 1 => Some(Pot1d {
                    lin: spec.lin[(0, 0)],
                    shift: spec.shift[0],
                    a: a[0],
                    b4: b[0],
                }),
                _ => None,
            },
            _ => None,
        }
    }

    #[inline]
    fn v(&self, y: f64) -> f64 {
        let u = self.lin * y + self.shift;
        let u2 = u * u;
        -(0.5 * self.a * u2 + self.b4 * u2 * u2)
    }

    #[inline]
    fn dv(&self, y: f64) -> f64 {
        let u = self.lin * y + self.shift;
        -(self.a * u + 4.0 * self.b4 * u * u * u) * self.lin
    }

    #[inline]
    fn ddv(&self, y: f64) -> f64 {
        let u = self.lin * y + self.shift;
        -(self.a + 12.0 * self.b4 * u * u) * self.lin * self.lin
    }
}

/// Scalar fast path: Newton mode search plus streaming Gauss–Hermite moments,
/// node count doubled until mean and variance move by less than 1e-8.
fn potential_posterior_1d(m: &Measure, t: f64, x: &DVector<f64>) -> Result<PosteriorStats> {
    let pot = Pot1d::from(m).expect("1d potential");
    let alpha = t / (1.0 - t);
    let b = x[0] / (1.0 - t);
    let g = |y: f64| pot.v(y) + b * y - 0.5 * alpha * y * y;
    let dg = |y: f64| pot.dv(y) + b - alpha * y;
    let ddg = |y: f64| pot.ddv(y) - alpha;

    // damped Newton from y0 = x
    let mut y = x[0];
    let mut fy = g(y);
    for _ in 0..50 {
        let d1 = dg(y);
        if d1.abs() <= 1e-13 * (1.0 + y.abs()) {
            break;
        }
        let d2 = ddg(y);
        let mut step = if d2 < -1e-300 { -d1 / d2 } else { d1 };
        let mut moved = false;
        for _ in 0..40 {
            let cand = y + step;
            let fc = g(cand);
            if fc > fy {
                y = cand;
                fy = fc;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let curv = -ddg(y);
    let sd = if curv > 1e-300 { curv.powf(-0.5) } else { 1.0 };

    let pass = |center: f64, env: f64, n: usize| -> (f64, f64, f64) {
        let rule = hermite_rule(n);
        let mut shift = f64::NEG_INFINITY;
        let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
        for (u, w) in rule.nodes.iter().zip(&rule.weights) {
            let yy = center + env * u;
            let term = w.ln() + u * u + g(yy);
            if !term.is_finite() {
                continue;
            }
            if term > shift {
                let r = if shift.is_finite() { (shift - term).exp() } else { 0.0 };
                s0 *= r;
                s1 *= r;
                s2 *= r;
                shift = term;
            }
            let ww = (term - shift).exp();
            s0 += ww;
            s1 += ww * yy;
            s2 += ww * yy * yy;
        }
        if s0 <= 0.0 {
            return (f64::NEG_INFINITY, 0.0, 0.0);
        }
        let mean = s1 / s0;
        let var = (s2 / s0 - mean * mean).max(0.0);
        (shift + s0.ln() + env.ln(), mean, var)
    };

    // pilot with the curvature envelope, then rescale to the observed spread
    let (_, m0, v0) = pass(y, 1.3 * sd * std::f64::consts::SQRT_2, 24);
    let center = m0;
    let env = 1.5 * v0.max(1e-300).sqrt() * std::f64::consts::SQRT_2;
    let mut n = 16;
    let (mut lm, mut mean, mut var) = pass(center, env, n);
    for _ in 0..4 {
        n *= 2;
        let (lm2, mean2, var2) = pass(center, env, n);
        let scale = 1.0 + mean2.abs().max(var2);
        if (mean2 - mean).abs() <= 1e-8 * scale && (var2 - var).abs() <= 1e-8 * scale {
            return Ok(finalize(
                t,
                x.clone(),
                DVector::from_element(1, mean2),
                DMatrix::from_element(1, 1, var2),
                lm2,
            ));
        }
        lm = lm2;
        mean = mean2;
        var = var2;
    }
    let _ = (lm, mean, var);
    Err(Error::QuadratureNoConvergence(format!(
        "1d potential posterior at t = {t}"
    )))
}

/// General-dimension potential posterior (dim 2): damped Newton mode search,
/// then adaptive tensor quadrature with a curvature-matched envelope.
fn potential_posterior_nd(
    m: &Measure,
    t: f64,
    x: &DVector<f64>,
    alpha: f64,
    b: &DVector<f64>,
) -> Result<PosteriorStats> {
    let d = m.dim;
    let g = |y: &DVector<f64>| m.log_density_unnorm(y) + b.dot(y) - 0.5 * alpha * y.norm_squared();
    // Newton from y0 = x
    let mut y = x.clone();
    let mut fy = g(&y);
    for _ in 0..50 {
        let mut grad = m.grad_log_density(&y) + b;
        grad.axpy(-alpha, &y, 1.0);
        if grad.amax() <= 1e-13 * (1.0 + y.amax()) {
            break;
        }
        let mut h = m.hess_log_density(&y);
        for i in 0..d {
            h[(i, i)] -= alpha;
        }
        let step = match spd_inverse(&(-&h)) {
            Ok((inv, _)) => inv * &grad,
            Err(_) => grad.clone(),
        };
        let mut s = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = &y + s * &step;
            let fc = g(&cand);
            if fc > fy {
                y = cand;
                fy = fc;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let mut h = m.hess_log_density(&y);
    for i in 0..d {
        h[(i, i)] -= alpha;
    }
    // pilot with the curvature envelope, then rescale to the observed spread
    let pilot_scale = crate::linalg::cholesky(&(spd_inverse(&(-&h))?.0 * 1.7))?;
    let pilot = envelope_moments(&g, &y, &pilot_scale, 24);
    let pilot_cov = crate::linalg::symmetrize(&pilot.cov);
    if crate::linalg::min_eigenvalue(&pilot_cov) <= 0.0 {
        return Err(Error::QuadratureNoConvergence(format!(
            "potential posterior pilot at t = {t}"
        )));
    }
    let scale = crate::linalg::cholesky(&(pilot_cov * 2.25))?;
    let center = pilot.mean.clone();

    let mut n = 16;
    let mut prev = envelope_moments(&g, &center, &scale, n);
    for _ in 0..4 {
        n *= 2;
        let cur = envelope_moments(&g, &center, &scale, n);
        let s = 1.0 + cur.mean.amax().max(cur.cov.amax());
        if (&cur.mean - &prev.mean).amax() <= 1e-8 * s && (&cur.cov - &prev.cov).amax() <= 1e-8 * s
        {
            return Ok(finalize(t, x.clone(), cur.mean, cur.cov, cur.log_mass));
        }
        prev = cur;
    }
    Err(Error::QuadratureNoConvergence(format!(
        "potential posterior at t = {t}"
    )))
}

// ----- heat-semigroup oracle -------------------------------------------------

/// ∇ ln P_{1−t} f_X at x by Gauss–Hermite smoothing of the relative density
/// and central finite differences (step 1e-5·(1+‖x‖)).
pub fn heat_loggrad(m: &Measure, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::TimeOutOfRange(t));
    }
    if matches!(m.kind, MeasureKind::Potential(_)) && m.dim > 2 {
        return Err(Error::InvalidArgument(
            "heat_loggrad supports potential kind only for dim ≤ 2".into(),
        ));
    }
    let d = m.dim;
    let s = 1.0 - t;
    let width = (2.0 * s).sqrt();
    let h = 1e-5 * (1.0 + x.norm());

    let log_pf = |z: &DVector<f64>, n: usize| -> Result<f64> {
        let rule = hermite_rule(n);
        let mut terms = Vec::with_capacity(n.pow(d as u32));
        let mut idx = vec![0usize; d];
        let mut y = DVector::<f64>::zeros(d);
        loop {
            let mut lw = 0.0;
            for k in 0..d {
                let j = idx[k];
                y[k] = z[k] + width * rule.nodes[j];
                lw += rule.weights[j].ln();
            }
            terms.push(lw + m.relative_log_density(&y)?);
            let mut k = 0;
            loop {
                if k == d {
                    let lse = log_sum_exp(&terms) - 0.5 * d as f64 * std::f64::consts::PI.ln();
                    return Ok(lse);
                }
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    };

    let grad_at = |n: usize| -> Result<DVector<f64>> {
        let mut g = DVector::<f64>::zeros(d);
        for i in 0..d {
            let mut zp = x.clone();
            zp[i] += h;
            let mut zm = x.clone();
            zm[i] -= h;
            g[i] = (log_pf(&zp, n)? - log_pf(&zm, n)?) / (2.0 * h);
        }
        Ok(g)
    };

    let mut n = 32;
    let mut prev = grad_at(n)?;
    for _ in 0..3 {
        n *= 2;
        let cur = grad_at(n)?;
        if (&cur - &prev).amax() <= 1e-7 * (1.0 + cur.amax()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::PotentialFamily;
    use approx::assert_relative_eq;

    fn gaussian1(v: f64) -> Measure {
        Measure::gaussian(DMatrix::from_element(1, 1, v)).unwrap()
    }

    /// Conjugate-form oracle for the scalar Gaussian posterior variance.
    fn gamma_closed_form(s2: f64, t: f64) -> f64 {
        s2 / (1.0 + t * (s2 - 1.0))
    }

    #[test]
    fn gaussian_scalar_posterior_matches_closed_form() {
        for &s2 in &[0.5, 1.0, 2.0, 3.7] {
            let m = gaussian1(s2);
            for &t in &[0.0, 0.1, 0.5, 0.9, 0.999] {
                for &x in &[-1.3, 0.0, 2.2] {
                    let st = posterior_moments(&m, t, &DVector::from_element(1, x)).unwrap();
                    assert_relative_eq!(
                        st.gamma[(0, 0)],
                        gamma_closed_form(s2, t),
                        epsilon = 1e-12
                    );
                    // drift closed form (σ²−1)x/(1+t(σ²−1))
                    assert_relative_eq!(
                        st.drift[0],
                        (s2 - 1.0) * x / (1.0 + t * (s2 - 1.0)),
                        epsilon = 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn standard_gaussian_is_the_fixed_point() {
        let m = Measure::gaussian(DMatrix::identity(2, 2)).unwrap();
        let x = DVector::from_vec(vec![0.7, -0.2]);
        let st = posterior_moments(&m, 0.3, &x).unwrap();
        assert_relative_eq!(st.mean, x, epsilon = 1e-12);
        assert!(st.drift.amax() < 1e-12);
        assert!((st.gamma - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn time_zero_at_origin_recovers_prior_moments() {
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
        let st = posterior_moments(&m, 0.0, &DVector::zeros(1)).unwrap();
        assert!(st.mean[0].abs() < 1e-12);
        assert_relative_eq!(st.gamma[(0, 0)], m.covariance()[(0, 0)], epsilon = 1e-12);
    }

    #[test]
    fn rejects_time_out_of_range() {
        let m = gaussian1(1.0);
        assert!(matches!(
            posterior_moments(&m, 1.0, &DVector::zeros(1)),
            Err(Error::TimeOutOfRange(_))
        ));
    }

    #[test]
    fn quadrature_path_agrees_with_gaussian_closed_form() {
        // run the 1d potential machinery on a quartic with b = 0, i.e. a
        // pure Gaussian with variance 1/a, and compare against conjugacy
        let a = 0.5; // variance 2
        let m = Measure::potential(
            PotentialFamily::Quartic {
                a: vec![a],
                b: vec![0.0],
            },
            None,
        )
        .unwrap();
        let g = gaussian1(1.0 / a);
        for &t in &[0.0, 0.2, 0.6, 0.95] {
            for &x in &[-0.8, 0.0, 1.4] {
                let xv = DVector::from_element(1, x);
                let st_q = posterior_moments(&m, t, &xv).unwrap();
                let st_g = posterior_moments(&g, t, &xv).unwrap();
                assert_relative_eq!(st_q.mean[0], st_g.mean[0], epsilon = 1e-8);
                assert_relative_eq!(st_q.gamma[(0, 0)], st_g.gamma[(0, 0)], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn potential_2d_posterior_matches_product_structure() {
        // a product quartic posterior factorizes; compare against two 1d runs
        let m2 = Measure::potential(
            PotentialFamily::Quartic {
                a: vec![1.0, 0.7],
                b: vec![0.3, 0.1],
            },
            None,
        )
        .unwrap();
        let m1a = Measure::potential(
            PotentialFamily::Quartic {
                a: vec![1.0],
                b: vec![0.3],
            },
            None,
        )
        .unwrap();
        let m1b = Measure::potential(
            PotentialFamily::Quartic {
                a: vec![0.7],
                b: vec![0.1],
            },
            None,
        )
        .unwrap();
        let t = 0.4;
        let x = DVector::from_vec(vec![0.5, -1.1]);
        let st = posterior_moments(&m2, t, &x).unwrap();
        let sa = posterior_moments(&m1a, t, &DVector::from_element(1, x[0])).unwrap();
        let sb = posterior_moments(&m1b, t, &DVector::from_element(1, x[1])).unwrap();
        assert_relative_eq!(st.mean[0], sa.mean[0], epsilon = 1e-7);
        assert_relative_eq!(st.mean[1], sb.mean[0], epsilon = 1e-7);
        assert_relative_eq!(st.cov[(0, 0)], sa.cov[(0, 0)], epsilon = 1e-7);
        assert_relative_eq!(st.cov[(1, 1)], sb.cov[(0, 0)], epsilon = 1e-7);
        assert!(st.cov[(0, 1)].abs() < 1e-7);
    }

    #[test]
    fn heat_loggrad_examples() {
        // standard Gaussian: identically zero
        let m = Measure::gaussian(DMatrix::identity(1, 1)).unwrap();
        let g = heat_loggrad(&m, 0.4, &DVector::from_element(1, 1.7)).unwrap();
        assert!(g[0].abs() < 1e-8);

        // σ² = 2, t = 0.5, x = 1 → (σ²−1)x/(1+t(σ²−1)) = 2/3
        let m = gaussian1(2.0);
        let g = heat_loggrad(&m, 0.5, &DVector::from_element(1, 1.0)).unwrap();
        assert_relative_eq!(g[0], 2.0 / 3.0, epsilon = 1e-6);

        // σ² = 0.5, t = 0, x = 1 → (σ²−1)·x = −0.5
        let m = gaussian1(0.5);
        let g = heat_loggrad(&m, 0.0, &DVector::from_element(1, 1.0)).unwrap();
        assert_relative_eq!(g[0], -0.5, epsilon = 1e-6);
    }

    #[test]
    fn drift_consistency_against_semigroup_oracle() {
        // posterior-mean drift vs the smoothing-gradient oracle on random
        // (measure, t, x) triples
        let measures = vec![
            gaussian1(1.7),
            Measure::mixture(
                vec![0.5, 0.5],
                vec![
                    (
                        DVector::from_element(1, -0.8),
                        DMatrix::from_element(1, 1, 0.6),
                    ),
                    (
                        DVector::from_element(1, 0.8),
                        DMatrix::from_element(1, 1, 0.6),
                    ),
                ],
            )
            .unwrap(),
            Measure::potential(
                PotentialFamily::Quartic {
                    a: vec![1.0],
                    b: vec![0.25],
                },
                None,
            )
            .unwrap(),
        ];
        let mut rng = crate::rng::substream(101, 0);
        use rand::Rng;
        for m in &measures {
            for _ in 0..70 {
                let t: f64 = rng.random::<f64>() * 0.99;
                let x = DVector::from_element(1, rng.random::<f64>() * 3.0 - 1.5);
                let st = posterior_moments(m, t, &x).unwrap();
                let oracle = heat_loggrad(m, t, &x).unwrap();
                let tol = 1e-4 * (1.0 + st.drift.norm());
                assert!(
                    (st.drift[0] - oracle[0]).abs() <= tol,
                    "drift {} vs oracle {} at t={t}",
                    st.drift[0],
                    oracle[0]
                );
            }
        }
    }

    #[test]
    fn gamma_upper_bounds_hold_pointwise() {
        // log-concave: Γ ⪯ I/t; ξ-uniform: Γ ⪯ I/((1−t)ξ+t), within 1e-8
        let quartic = Measure::potential(
            PotentialFamily::Quartic {
                a: vec![1.0],
                b: vec![0.25],
            },
            None,
        )
        .unwrap();
        let xi = 1.0;
        let mut rng = crate::rng::substream(7, 0);
        use rand::Rng;
        for _ in 0..40 {
            let t: f64 = 0.05 + 0.94 * rng.random::<f64>();
            let x = DVector::from_element(1, 4.0 * rng.random::<f64>() - 2.0);
            let st = posterior_moments(&quartic, t, &x).unwrap();
            let g = st.gamma[(0, 0)];
            assert!(g <= 1.0 / t * (1.0 + 1e-8), "Γ={g} beats 1/t at t={t}");
            let cap = 1.0 / ((1.0 - t) * xi + t);
            assert!(g <= cap * (1.0 + 1e-8), "Γ={g} beats uniform cap {cap}");
        }
    }

    #[test]
    fn mixture_posterior_weights_stay_normalized() {
        let m = Measure::mixture(
            vec![0.3, 0.7],
            vec![
                (
                    DVector::from_element(1, -1.2),
                    DMatrix::from_element(1, 1, 0.7),
                ),
                (
                    DVector::from_element(1, 0.6),
                    DMatrix::from_element(1, 1, 1.1),
                ),
            ],
        )
        .unwrap();
        // the mixture covariance must stay PSD and finite across extreme states
        for &t in &[0.05, 0.5, 0.9999] {
            for &x in &[-25.0, 0.0, 25.0] {
                let st = posterior_moments(&m, t, &DVector::from_element(1, x)).unwrap();
                assert!(st.cov[(0, 0)].is_finite() && st.cov[(0, 0)] >= 0.0);
            }
        }
    }
}
