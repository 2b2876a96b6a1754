//! Centered probability measures on R^d with evaluable densities, gradients,
//! exact or diagnosed sampling, and the convexity / spectral-gap metadata the
//! deficit bounds consume.
//!
//! Three kinds are supported:
//!   * `Gaussian` — centered, arbitrary SPD covariance, everything closed form;
//!   * `Mixture` — finite Gaussian mixture, recentered at construction;
//!   * `Potential` — a named built-in log-density family (currently the
//!     quartic family V(x) = −Σ aᵢxᵢ²/2 + bᵢxᵢ⁴) composed with an optional
//!     linear map, normalized once by adaptive Gauss–Hermite quadrature.
//!
//! Measures are immutable after construction and safe to share across threads.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, max_eigenvalue, min_eigenvalue, spd_inv_sqrt, spd_inverse, spd_log_det, spd_sqrt,
    symmetrize,
};
use crate::quad::{self, envelope_moments, log_sum_exp};
use crate::rng::{standard_normal_vector, substream};

/// Substream indices reserved for internal deterministic draws.
const STREAM_SAMPLER: u64 = 0x53414d50; // measure sampling
const VALIDATION_SEED: u64 = 0x5eed_c4ec; // hessian spot checks

const LN_2PI: f64 = 1.8378770664093453;

/// Named built-in log-density families for the `Potential` kind.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialFamily {
    /// ln p(u) = −Σᵢ (aᵢ uᵢ²/2 + bᵢ uᵢ⁴) + const, aᵢ > 0, bᵢ ≥ 0.
    Quartic { a: Vec<f64>, b: Vec<f64> },
}

impl PotentialFamily {
    pub fn dim(&self) -> usize {
        match self {
            PotentialFamily::Quartic { a, .. } => a.len(),
        }
    }

    fn log_density(&self, u: &DVector<f64>) -> f64 {
        match self {
            PotentialFamily::Quartic { a, b } => {
                let mut v = 0.0;
                for i in 0..a.len() {
                    let x = u[i];
                    v -= 0.5 * a[i] * x * x + b[i] * x.powi(4);
                }
                v
            }
        }
    }

    fn grad(&self, u: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            PotentialFamily::Quartic { a, b } => {
                for i in 0..a.len() {
                    let x = u[i];
                    out[i] = -(a[i] * x + 4.0 * b[i] * x * x * x);
                }
            }
        }
    }

    fn hess(&self, u: &DVector<f64>, out: &mut DMatrix<f64>) {
        match self {
            PotentialFamily::Quartic { a, b } => {
                out.fill(0.0);
                for i in 0..a.len() {
                    out[(i, i)] = -(a[i] + 12.0 * b[i] * u[i] * u[i]);
                }
            }
        }
    }

    /// Uniform convexity of −ln p for the raw family, when it is known.
    fn uniform_convexity(&self) -> Option<f64> {
        match self {
            PotentialFamily::Quartic { a, b } => {
                if b.iter().all(|&x| x >= 0.0) {
                    a.iter().copied().reduce(f64::min)
                } else {
                    None
                }
            }
        }
    }

    fn describe(&self, out: &mut String) {
        match self {
            PotentialFamily::Quartic { a, b } => {
                out.push_str("quartic;a=");
                push_floats(out, a);
                out.push_str(";b=");
                push_floats(out, b);
            }
        }
    }
}

fn push_floats(out: &mut String, xs: &[f64]) {
    for x in xs {
        out.push_str(&format!("{x:.17e},"));
    }
}

/// A `Potential` measure: family ∘ (linear map, shift), with the normalizer
/// and moments computed once by quadrature.
#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    /// Inner map: the unnormalized log-density is family(lin·x + shift).
    pub lin: DMatrix<f64>,
    pub shift: DVector<f64>,
}

impl PotentialSpec {
    fn log_density_unnorm(&self, x: &DVector<f64>) -> f64 {
        let u = &self.lin * x + &self.shift;
        self.family.log_density(&u)
    }

    fn grad_log_density(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = &self.lin * x + &self.shift;
        let mut g = DVector::zeros(u.len());
        self.family.grad(&u, &mut g);
        self.lin.transpose() * g
    }

    fn hess_log_density(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let u = &self.lin * x + &self.shift;
        let mut h = DMatrix::zeros(u.len(), u.len());
        self.family.hess(&u, &mut h);
        symmetrize(&(self.lin.transpose() * h * &self.lin))
    }
}

#[derive(Clone, Debug)]
pub enum MeasureKind {
    Gaussian {
        cov: DMatrix<f64>,
    },
    Mixture {
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covs: Vec<DMatrix<f64>>,
    },
    Potential(PotentialSpec),
}

/// Precomputed Gaussian factor data.
#[derive(Clone, Debug)]
struct GaussianData {
    prec: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
}

#[derive(Clone, Debug, Copy, PartialEq, Eq)]
pub enum PoincareFlag {
    Exact,
    UpperBound,
    Numerical,
}

impl PoincareFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PoincareFlag::Exact => "exact",
            PoincareFlag::UpperBound => "upper_bound",
            PoincareFlag::Numerical => "numerical",
        }
    }
}

/// A centered probability measure on R^d.
#[derive(Clone, Debug)]
pub struct Measure {
    pub dim: usize,
    pub kind: MeasureKind,
    /// Declared uniform log-concavity: −∇² ln p ⪰ ξ·I.
    pub xi: Option<f64>,
    /// Declared upper bound on the Poincaré constant.
    pub poincare: Option<f64>,
    covariance: DMatrix<f64>,
    /// ln Z for the Potential kind (density = exp(V − ln Z)); None when the
    /// dimension is too high for quadrature and no value was supplied.
    log_normalizer: Option<f64>,
    gauss: Option<GaussianData>,
    mix: Vec<GaussianData>,
    inverse_cdf: OnceLock<InverseCdfTable>,
}

impl Measure {
    // ----- constructors -------------------------------------------------

    /// Centered Gaussian with the given SPD covariance.
    pub fn gaussian(cov: DMatrix<f64>) -> Result<Self> {
        let d = cov.nrows();
        if cov.ncols() != d || d == 0 {
            return Err(Error::InvalidArgument("covariance must be square".into()));
        }
        let cov = symmetrize(&cov);
        let lmin = min_eigenvalue(&cov);
        if lmin <= 0.0 {
            return Err(Error::SingularCovariance(lmin));
        }
        let gauss = GaussianData {
            prec: spd_inverse(&cov)?.0,
            chol: cholesky(&cov)?,
            log_det: spd_log_det(&cov)?,
        };
        let xi = 1.0 / max_eigenvalue(&cov);
        let poincare = max_eigenvalue(&cov);
        Ok(Measure {
            dim: d,
            kind: MeasureKind::Gaussian { cov: cov.clone() },
            xi: Some(xi),
            poincare: Some(poincare),
            covariance: cov,
            log_normalizer: Some(0.0),
            gauss: Some(gauss),
            mix: Vec::new(),
            inverse_cdf: OnceLock::new(),
        })
    }

    /// Gaussian mixture, recentered so the overall mean is zero.
    pub fn mixture(weights: Vec<f64>, components: Vec<(DVector<f64>, DMatrix<f64>)>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(Error::InvalidArgument(
                "mixture needs matching, nonempty weights/components".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mixture weights must form a simplex (sum = {sum})"
            )));
        }
        let d = components[0].0.len();
        let mut mean = DVector::<f64>::zeros(d);
        for (w, (m, _)) in weights.iter().zip(&components) {
            mean.axpy(*w, m, 1.0);
        }
        let mut means = Vec::new();
        let mut covs = Vec::new();
        let mut mix = Vec::new();
        let mut covariance = DMatrix::<f64>::zeros(d, d);
        for (w, (m, c)) in weights.iter().zip(&components) {
            let mc = m - &mean;
            let c = symmetrize(c);
            covariance += *w * (&c + &mc * mc.transpose());
            mix.push(GaussianData {
                prec: spd_inverse(&c)?.0,
                chol: cholesky(&c)?,
                log_det: spd_log_det(&c)?,
            });
            means.push(mc);
            covs.push(c);
        }
        covariance = symmetrize(&covariance);
        let lmin = min_eigenvalue(&covariance);
        if lmin <= 0.0 {
            return Err(Error::SingularCovariance(lmin));
        }
        Ok(Measure {
            dim: d,
            kind: MeasureKind::Mixture {
                weights,
                means,
                covs,
            },
            xi: None,
            poincare: None,
            covariance,
            log_normalizer: Some(0.0),
            gauss: None,
            mix,
            inverse_cdf: OnceLock::new(),
        })
    }

    /// Potential-kind measure from a named family. Normalizer and moments are
    /// computed by adaptive quadrature for dim ≤ 2 (moments also for dim 3);
    /// for dim 3 the normalizer must be supplied by the caller.
    pub fn potential(family: PotentialFamily, log_normalizer: Option<f64>) -> Result<Self> {
        let d = family.dim();
        if d == 0 || d > 3 {
            return Err(Error::InvalidArgument(
                "potential kind supports dimensions 1-3".into(),
            ));
        }
        let xi_family = family.uniform_convexity();
        let spec = PotentialSpec {
            family,
            lin: DMatrix::identity(d, d),
            shift: DVector::zeros(d),
        };
        Self::from_potential_spec(spec, xi_family, None, log_normalizer)
    }

    fn from_potential_spec(
        spec: PotentialSpec,
        xi: Option<f64>,
        poincare: Option<f64>,
        log_normalizer: Option<f64>,
    ) -> Result<Self> {
        let d = spec.lin.ncols();
        // mode & curvature of the raw potential give the quadrature envelope
        let mode = potential_mode(&spec, &DVector::zeros(d))?;
        let h = spec.hess_log_density(&mode);
        let neg_h = -&h;
        if min_eigenvalue(&neg_h) <= 0.0 {
            return Err(Error::InvalidArgument(
                "potential must be strictly log-concave at its mode".into(),
            ));
        }
        let f = |x: &DVector<f64>| spec.log_density_unnorm(x);
        // pilot pass with the curvature envelope, then rescale the envelope
        // to the observed spread (mode curvature understates concentration
        // for strongly quartic potentials)
        let pilot_scale = cholesky(&(spd_inverse(&neg_h)?.0 * 2.25))?;
        let pilot = envelope_moments(&f, &mode, &pilot_scale, 48);
        let pilot_cov = symmetrize(&pilot.cov);
        if min_eigenvalue(&pilot_cov) <= 0.0 {
            return Err(Error::QuadratureNoConvergence(
                "potential pilot pass degenerate".into(),
            ));
        }
        let scale = cholesky(&(pilot_cov * 2.25))?;
        let center = pilot.mean.clone();
        let mut moments = None;
        let mut prev: Option<quad::EnvelopeMoments> = None;
        let mut n = 32;
        let doublings = if d >= 3 { 4 } else { 6 };
        for _ in 0..=doublings {
            let cur = envelope_moments(&f, &center, &scale, n);
            if let Some(p) = &prev {
                let dm = (&cur.mean - &p.mean).amax();
                let dc = (&cur.cov - &p.cov).amax();
                let dz = (cur.log_mass - p.log_mass).abs();
                let s = 1.0 + cur.cov.amax();
                if dm <= 1e-10 * s && dc <= 1e-10 * s && dz <= 1e-9 {
                    moments = Some(cur.clone());
                    break;
                }
            }
            prev = Some(cur);
            n *= 2;
        }
        let m = moments.ok_or_else(|| {
            Error::QuadratureNoConvergence("potential measure moments".into())
        })?;
        // recenter: density of X − mean has inner shift moved by mean
        let mut spec = spec;
        spec.shift += &spec.lin * &m.mean;
        let covariance = {
            let c = symmetrize(&m.cov);
            let lmin = min_eigenvalue(&c);
            if lmin <= 0.0 {
                return Err(Error::SingularCovariance(lmin));
            }
            c
        };
        let log_z = if d <= 2 {
            Some(m.log_mass)
        } else {
            log_normalizer
        };
        Ok(Measure {
            dim: d,
            kind: MeasureKind::Potential(spec),
            xi,
            poincare,
            covariance,
            log_normalizer: log_z,
            gauss: None,
            mix: Vec::new(),
            inverse_cdf: OnceLock::new(),
        })
    }

    /// Declare a uniform log-concavity parameter. Spot-checks the Hessian at
    /// 100 deterministic random points before accepting it.
    pub fn with_xi(mut self, xi: f64) -> Result<Self> {
        if xi < 0.0 {
            return Err(Error::InvalidArgument("xi must be ≥ 0".into()));
        }
        if xi > 0.0 {
            self.spot_check_xi(xi)?;
        }
        self.xi = Some(xi);
        Ok(self)
    }

    /// Declare an upper bound on the Poincaré constant; overrides every route.
    pub fn with_poincare(mut self, cp: f64) -> Result<Self> {
        if cp <= 0.0 {
            return Err(Error::InvalidArgument("poincare bound must be > 0".into()));
        }
        self.poincare = Some(cp);
        Ok(self)
    }

    fn spot_check_xi(&self, xi: f64) -> Result<()> {
        let tol = 1e-6;
        let mut rng = substream(VALIDATION_SEED, 17);
        let scale = spd_sqrt(&(self.covariance.clone() * 1.5))?;
        for _ in 0..100 {
            let x = &scale * standard_normal_vector(&mut rng, self.dim);
            let h = self.hess_log_density(&x);
            let lmin = min_eigenvalue(&(-h));
            if lmin < xi - tol {
                return Err(Error::InvalidArgument(format!(
                    "declared xi = {xi} but −∇²ln p has eigenvalue {lmin:.6} at a sampled point"
                )));
            }
        }
        Ok(())
    }

    // ----- density evaluations ------------------------------------------

    /// ln p(x), absolutely normalized.
    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        match &self.kind {
            MeasureKind::Gaussian { .. } => {
                let g = self.gauss.as_ref().unwrap();
                let q = (x.transpose() * &g.prec * x)[(0, 0)];
                Ok(-0.5 * q - 0.5 * (self.dim as f64 * LN_2PI + g.log_det))
            }
            MeasureKind::Mixture {
                weights,
                means,
                covs: _,
            } => {
                let mut terms = Vec::with_capacity(weights.len());
                for (i, w) in weights.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    let g = &self.mix[i];
                    let dx = x - &means[i];
                    let q = (dx.transpose() * &g.prec * &dx)[(0, 0)];
                    terms.push(w.ln() - 0.5 * q - 0.5 * (self.dim as f64 * LN_2PI + g.log_det));
                }
                Ok(log_sum_exp(&terms))
            }
            MeasureKind::Potential(spec) => {
                let z = self.log_normalizer.ok_or_else(|| {
                    Error::UnnormalizedDensity(
                        "potential normalizer unavailable (dim > 2 and none supplied)".into(),
                    )
                })?;
                Ok(spec.log_density_unnorm(x) - z)
            }
        }
    }

    /// ln p(x) up to the measure's additive constant (always available).
    pub fn log_density_unnorm(&self, x: &DVector<f64>) -> f64 {
        match &self.kind {
            MeasureKind::Potential(spec) => spec.log_density_unnorm(x),
            _ => self.log_density(x).unwrap(),
        }
    }

    pub fn grad_log_density(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            MeasureKind::Gaussian { .. } => -(&self.gauss.as_ref().unwrap().prec * x),
            MeasureKind::Mixture { weights, means, .. } => {
                let mut lws = Vec::with_capacity(weights.len());
                let mut gs = Vec::with_capacity(weights.len());
                for (i, w) in weights.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    let g = &self.mix[i];
                    let dx = x - &means[i];
                    let gi = -(&g.prec * &dx);
                    let q = (dx.transpose() * &g.prec * &dx)[(0, 0)];
                    lws.push(w.ln() - 0.5 * q - 0.5 * g.log_det);
                    gs.push(gi);
                }
                let lse = log_sum_exp(&lws);
                let mut out = DVector::zeros(self.dim);
                for (lw, gi) in lws.iter().zip(&gs) {
                    out.axpy((lw - lse).exp(), gi, 1.0);
                }
                out
            }
            MeasureKind::Potential(spec) => spec.grad_log_density(x),
        }
    }

    pub fn hess_log_density(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.kind {
            MeasureKind::Gaussian { .. } => -self.gauss.as_ref().unwrap().prec.clone(),
            MeasureKind::Mixture { weights, means, .. } => {
                let mut lws = Vec::new();
                let mut gs = Vec::new();
                let mut precs = Vec::new();
                for (i, w) in weights.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    let g = &self.mix[i];
                    let dx = x - &means[i];
                    let gi = -(&g.prec * &dx);
                    let q = (dx.transpose() * &g.prec * &dx)[(0, 0)];
                    lws.push(w.ln() - 0.5 * q - 0.5 * g.log_det);
                    gs.push(gi);
                    precs.push(&g.prec);
                }
                let lse = log_sum_exp(&lws);
                let mut grad = DVector::<f64>::zeros(self.dim);
                let mut h = DMatrix::<f64>::zeros(self.dim, self.dim);
                for ((lw, gi), p) in lws.iter().zip(&gs).zip(&precs) {
                    let r = (lw - lse).exp();
                    grad.axpy(r, gi, 1.0);
                    h += r * (gi * gi.transpose() - *p);
                }
                symmetrize(&(h - &grad * grad.transpose()))
            }
            MeasureKind::Potential(spec) => spec.hess_log_density(x),
        }
    }

    /// ln f_X(x) = ln p(x) − ln γ(x), the log-density relative to the
    /// standard Gaussian.
    pub fn relative_log_density(&self, x: &DVector<f64>) -> Result<f64> {
        let lg = -0.5 * x.norm_squared() - 0.5 * self.dim as f64 * LN_2PI;
        Ok(self.log_density(x)? - lg)
    }

    // ----- metadata -----------------------------------------------------

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn sigma_min2(&self) -> f64 {
        min_eigenvalue(&self.covariance)
    }

    pub fn sigma_max2(&self) -> f64 {
        max_eigenvalue(&self.covariance)
    }

    pub fn is_isotropic(&self, tol: f64) -> bool {
        (&self.covariance - DMatrix::<f64>::identity(self.dim, self.dim)).amax() <= tol
    }

    pub fn is_standard_gaussian(&self, tol: f64) -> bool {
        matches!(self.kind, MeasureKind::Gaussian { .. }) && self.is_isotropic(tol)
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.kind, MeasureKind::Gaussian { .. })
    }

    pub fn is_log_concave(&self) -> bool {
        match &self.kind {
            MeasureKind::Gaussian { .. } => true,
            MeasureKind::Mixture { weights, .. } => weights.len() == 1,
            MeasureKind::Potential(_) => self.xi.map(|x| x >= 0.0).unwrap_or(false),
        }
    }

    /// Stable SHA-256 fingerprint of the measure's defining data.
    pub fn fingerprint(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("dim={};", self.dim));
        match &self.kind {
            MeasureKind::Gaussian { cov } => {
                s.push_str("gaussian;cov=");
                push_floats(&mut s, cov.as_slice());
            }
            MeasureKind::Mixture {
                weights,
                means,
                covs,
            } => {
                s.push_str("mixture;w=");
                push_floats(&mut s, weights);
                for (m, c) in means.iter().zip(covs) {
                    s.push_str(";m=");
                    push_floats(&mut s, m.as_slice());
                    s.push_str(";c=");
                    push_floats(&mut s, c.as_slice());
                }
            }
            MeasureKind::Potential(spec) => {
                s.push_str("potential;");
                spec.family.describe(&mut s);
                s.push_str(";lin=");
                push_floats(&mut s, spec.lin.as_slice());
                s.push_str(";shift=");
                push_floats(&mut s, spec.shift.as_slice());
            }
        }
        if let Some(x) = self.xi {
            s.push_str(&format!(";xi={x:.17e}"));
        }
        if let Some(c) = self.poincare {
            s.push_str(&format!(";cp={c:.17e}"));
        }
        let mut h = Sha256::new();
        h.update(s.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    // ----- transforms ---------------------------------------------------

    /// The law of A·X for an invertible map A.
    pub fn linear_map(&self, a: &DMatrix<f64>) -> Result<Self> {
        let a_inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularCovariance(0.0))?;
        let gain = max_eigenvalue(&symmetrize(&(a * a.transpose())));
        let xi = self.xi.map(|x| x / gain);
        let poincare = self.poincare.map(|c| c * gain);
        match &self.kind {
            MeasureKind::Gaussian { cov } => {
                let mut m = Measure::gaussian(symmetrize(&(a * cov * a.transpose())))?;
                m.poincare = self.poincare.map(|c| (c * gain).min(m.sigma_max2()));
                Ok(m)
            }
            MeasureKind::Mixture {
                weights,
                means,
                covs,
            } => {
                let comps = means
                    .iter()
                    .zip(covs)
                    .map(|(m, c)| (a * m, symmetrize(&(a * c * a.transpose()))))
                    .collect();
                let mut m = Measure::mixture(weights.clone(), comps)?;
                m.xi = xi.filter(|&x| x > 0.0);
                m.poincare = poincare;
                Ok(m)
            }
            MeasureKind::Potential(spec) => {
                let new_spec = PotentialSpec {
                    family: spec.family.clone(),
                    lin: &spec.lin * &a_inv,
                    shift: spec.shift.clone(),
                };
                // density of A·X is p(A⁻¹y)/|det A|, so ln Z picks up ln|det A|
                let log_z = self
                    .log_normalizer
                    .map(|z| z + a.determinant().abs().ln());
                Measure::from_potential_spec(new_spec, xi, poincare, log_z)
            }
        }
    }

    /// The law of s·X.
    pub fn scale(&self, s: f64) -> Result<Self> {
        self.linear_map(&(DMatrix::identity(self.dim, self.dim) * s))
    }

    /// Rescale to identity covariance.
    pub fn isotropized(&self) -> Result<Self> {
        let a = spd_inv_sqrt(&self.covariance, 1e-12)?;
        self.linear_map(&a)
    }

    // ----- sampling -------------------------------------------------------

    /// n i.i.d. samples; exact for Gaussian/Mixture, inverse-CDF tables for
    /// one-dimensional potentials and MALA (with diagnostics) above that.
    /// Deterministic given the seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
        if n == 0 {
            return Err(Error::InvalidArgument("need n ≥ 1 samples".into()));
        }
        let mut rng = substream(seed, STREAM_SAMPLER);
        match &self.kind {
            MeasureKind::Gaussian { .. } => {
                let l = &self.gauss.as_ref().unwrap().chol;
                Ok((0..n)
                    .map(|_| l * standard_normal_vector(&mut rng, self.dim))
                    .collect())
            }
            MeasureKind::Mixture { weights, means, .. } => {
                let mut cdf = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in weights {
                    acc += w;
                    cdf.push(acc);
                }
                Ok((0..n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        let idx = cdf.partition_point(|&c| c < u).min(weights.len() - 1);
                        &means[idx] + &self.mix[idx].chol * standard_normal_vector(&mut rng, self.dim)
                    })
                    .collect())
            }
            MeasureKind::Potential(_) => {
                if self.dim == 1 {
                    let table = self.inverse_cdf_table()?;
                    Ok((0..n)
                        .map(|_| DVector::from_element(1, table.invert(rng.random())))
                        .collect())
                } else {
                    self.sample_mala(n, &mut rng)
                }
            }
        }
    }

    fn inverse_cdf_table(&self) -> Result<&InverseCdfTable> {
        if let Some(t) = self.inverse_cdf.get() {
            return Ok(t);
        }
        let t = InverseCdfTable::build(self)?;
        let _ = self.inverse_cdf.set(t);
        Ok(self.inverse_cdf.get().unwrap())
    }

    /// Metropolis-adjusted Langevin sampler with step-size adaptation to the
    /// 0.574 optimal-scaling target, 10⁴ burn-in steps, and acceptance/ESS
    /// diagnostics.
    fn sample_mala(&self, n: usize, rng: &mut crate::rng::SubRng) -> Result<Vec<DVector<f64>>> {
        let d = self.dim;
        let thin = 5usize;
        let burn_in = 10_000usize;
        let mut step = 0.8 * (self.sigma_min2().sqrt()) * (d as f64).powf(-1.0 / 6.0);
        let mut x = DVector::<f64>::zeros(d);
        let mut lp = self.log_density_unnorm(&x);
        let mut grad = self.grad_log_density(&x);

        let mala_step = |x: &mut DVector<f64>,
                             lp: &mut f64,
                             grad: &mut DVector<f64>,
                             step: f64,
                             rng: &mut crate::rng::SubRng|
         -> bool {
            let half = 0.5 * step * step;
            let noise = standard_normal_vector(rng, d);
            let prop = &*x + half * &*grad + step * &noise;
            let lp_prop = self.log_density_unnorm(&prop);
            let grad_prop = self.grad_log_density(&prop);
            // q(x | prop) − q(prop | x)
            let fwd = &prop - &*x - half * &*grad;
            let bwd = &*x - &prop - half * &grad_prop;
            let log_q = (-bwd.norm_squared() + fwd.norm_squared()) / (2.0 * step * step);
            let log_alpha = lp_prop - *lp + log_q;
            if rng.random::<f64>().ln() < log_alpha {
                *x = prop;
                *lp = lp_prop;
                *grad = grad_prop;
                true
            } else {
                false
            }
        };

        for k in 0..burn_in {
            let accepted = mala_step(&mut x, &mut lp, &mut grad, step, rng);
            let gamma = 0.5 / (1.0 + k as f64 / 50.0).powf(0.7);
            let target = 0.574;
            step *= ((if accepted { 1.0 } else { 0.0 } - target) * gamma).exp();
            step = step.clamp(1e-6, 1e3);
        }

        let mut out = Vec::with_capacity(n);
        let mut accepts = 0usize;
        let mut total = 0usize;
        for _ in 0..n {
            for _ in 0..thin {
                if mala_step(&mut x, &mut lp, &mut grad, step, rng) {
                    accepts += 1;
                }
                total += 1;
            }
            out.push(x.clone());
        }
        let acc_rate = accepts as f64 / total as f64;
        if !(0.3..=0.8).contains(&acc_rate) {
            return Err(Error::SamplerDiagnosticFailure(format!(
                "MALA acceptance rate {acc_rate:.3} outside [0.3, 0.8]"
            )));
        }
        let ess = min_ess_fraction(&out, d);
        if ess < 0.1 {
            return Err(Error::SamplerDiagnosticFailure(format!(
                "effective sample size per draw {ess:.3} < 0.1"
            )));
        }
        Ok(out)
    }

    // ----- Poincaré bound -------------------------------------------------

    /// Upper bound on the Poincaré constant with its provenance flag.
    /// Priority: user override, exact Gaussian value, 1/ξ, a one-dimensional
    /// discretized-generator estimate.
    pub fn poincare_bound(&self) -> Result<(f64, PoincareFlag)> {
        if let Some(c) = self.poincare {
            if self.is_gaussian() && (c - self.sigma_max2()).abs() <= 1e-12 {
                return Ok((c, PoincareFlag::Exact));
            }
            return Ok((c, PoincareFlag::UpperBound));
        }
        if self.is_gaussian() {
            return Ok((self.sigma_max2(), PoincareFlag::Exact));
        }
        if let Some(xi) = self.xi {
            if xi > 0.0 {
                return Ok((1.0 / xi, PoincareFlag::UpperBound));
            }
        }
        if self.dim == 1 {
            return Ok((poincare_numerical_1d(self)?, PoincareFlag::Numerical));
        }
        Err(Error::PoincareUnavailable(
            "no declared bound, not Gaussian, xi unknown and dim > 1".into(),
        ))
    }
}

// ----- joint whitening ----------------------------------------------------

/// Apply the common map A = (½(Cov X + Cov Y))^{−1/2} to both measures so the
/// transformed covariances sum to 2·I; returns the map for provenance.
pub fn joint_whiten(mx: &Measure, my: &Measure) -> Result<(Measure, Measure, DMatrix<f64>)> {
    if mx.dim != my.dim {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let avg = (mx.covariance() + my.covariance()) * 0.5;
    let lmin = min_eigenvalue(&avg);
    if lmin < 1e-12 {
        return Err(Error::SingularCovariance(lmin));
    }
    let a = spd_inv_sqrt(&avg, 1e-12)?;
    let mx2 = mx.linear_map(&a)?;
    let my2 = my.linear_map(&a)?;
    Ok((mx2, my2, a))
}

// ----- potential-mode search ------------------------------------------------

/// Damped Newton ascent of the unnormalized log-density, 50-iteration cap.
fn potential_mode(spec: &PotentialSpec, start: &DVector<f64>) -> Result<DVector<f64>> {
    let mut y = start.clone();
    let mut f = spec.log_density_unnorm(&y);
    for _ in 0..50 {
        let g = spec.grad_log_density(&y);
        if g.amax() <= 1e-12 * (1.0 + y.amax()) {
            return Ok(y);
        }
        let h = spec.hess_log_density(&y);
        let neg_h = -&h;
        let step = match spd_inverse(&neg_h) {
            Ok((inv, _)) => inv * &g,
            Err(_) => g.clone(),
        };
        let mut s = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = &y + s * &step;
            let fc = spec.log_density_unnorm(&cand);
            if fc > f {
                y = cand;
                f = fc;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if !moved {
            return Ok(y);
        }
    }
    Ok(y)
}

// ----- inverse-CDF sampler (dim 1) -----------------------------------------

#[derive(Clone, Debug)]
struct InverseCdfTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdfTable {
    fn build(m: &Measure) -> Result<Self> {
        let spec = match &m.kind {
            MeasureKind::Potential(s) => s,
            _ => unreachable!("inverse CDF is only used for 1D potentials"),
        };
        let mode = potential_mode(spec, &DVector::zeros(1))?[0];
        let h = spec.hess_log_density(&DVector::from_element(1, mode))[(0, 0)];
        let sd = if h < -1e-12 { (-1.0 / h).sqrt() } else { 1.0 };
        let lp = |x: f64| spec.log_density_unnorm(&DVector::from_element(1, x));
        let peak = lp(mode);
        let mut half = 8.0 * sd;
        for _ in 0..12 {
            if lp(mode - half) - peak < -40.0 && lp(mode + half) - peak < -40.0 {
                break;
            }
            half *= 1.6;
        }
        let n = 16_384usize;
        let xs: Vec<f64> = (0..=n)
            .map(|k| mode - half + 2.0 * half * k as f64 / n as f64)
            .collect();
        let ps: Vec<f64> = xs.iter().map(|&x| (lp(x) - peak).exp()).collect();
        let mut cdf = vec![0.0; xs.len()];
        for k in 1..xs.len() {
            cdf[k] = cdf[k - 1] + 0.5 * (ps[k] + ps[k - 1]) * (xs[k] - xs[k - 1]);
        }
        let total = cdf[xs.len() - 1];
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::UnnormalizedDensity(
                "inverse CDF table mass is degenerate".into(),
            ));
        }
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Ok(InverseCdfTable { xs, cdf })
    }

    fn invert(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let k = self.cdf.partition_point(|&c| c < u);
        if k == 0 {
            return self.xs[0];
        }
        if k >= self.cdf.len() {
            return *self.xs.last().unwrap();
        }
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.xs[k - 1] + w * (self.xs[k] - self.xs[k - 1])
    }
}

// ----- ESS diagnostic -------------------------------------------------------

/// Minimum over coordinates of ESS/n via Geyer's initial positive sequence.
fn min_ess_fraction(samples: &[DVector<f64>], d: usize) -> f64 {
    let n = samples.len();
    if n < 16 {
        return 1.0;
    }
    let mut worst = f64::INFINITY;
    for c in 0..d {
        let xs: Vec<f64> = samples.iter().map(|s| s[c]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        if var <= 0.0 {
            continue;
        }
        let max_lag = (n / 2).min(1024);
        let rho = |lag: usize| -> f64 {
            let mut acc = 0.0;
            for i in 0..n - lag {
                acc += (xs[i] - mean) * (xs[i + lag] - mean);
            }
            acc / (n as f64 * var)
        };
        let mut tau = 1.0;
        let mut k = 1;
        while k + 1 < max_lag {
            let pair = rho(k) + rho(k + 1);
            if pair <= 0.0 {
                break;
            }
            tau += 2.0 * pair;
            k += 2;
        }
        worst = worst.min(1.0 / tau.max(1.0));
    }
    if worst.is_finite() {
        worst
    } else {
        1.0
    }
}

// ----- 1D Poincaré estimate -------------------------------------------------

/// Rayleigh-quotient estimate of C_p for a one-dimensional measure from the
/// discretized diffusion generator: smallest nonzero eigenvalue of the
/// stiffness/mass pencil on a density-weighted grid, by shift-inverted power
/// iteration with the constant mode deflated.
fn poincare_numerical_1d(m: &Measure) -> Result<f64> {
    let est = |half: f64, n: usize| -> f64 {
        let xs: Vec<f64> = (0..=n)
            .map(|k| -half + 2.0 * half * k as f64 / n as f64)
            .collect();
        let lps: Vec<f64> = xs
            .iter()
            .map(|&x| m.log_density_unnorm(&DVector::from_element(1, x)))
            .collect();
        let peak = lps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ps: Vec<f64> = lps.iter().map(|&l| (l - peak).exp()).collect();
        let h = xs[1] - xs[0];
        let np = xs.len();
        // mass mᵢ = pᵢ·h, stiffness from midpoint weights
        let mass: Vec<f64> = ps.iter().map(|&p| (p * h).max(1e-300)).collect();
        let wmid: Vec<f64> = (0..np - 1).map(|i| 0.5 * (ps[i] + ps[i + 1]) / h).collect();
        let sqrt_m: Vec<f64> = mass.iter().map(|&x| x.sqrt()).collect();
        // B = M^{-1/2} K M^{-1/2}, tridiagonal
        let mut diag = vec![0.0; np];
        let mut off = vec![0.0; np - 1];
        for i in 0..np {
            let mut v = 0.0;
            if i > 0 {
                v += wmid[i - 1];
            }
            if i < np - 1 {
                v += wmid[i];
            }
            diag[i] = v / mass[i];
        }
        for i in 0..np - 1 {
            off[i] = -wmid[i] / (sqrt_m[i] * sqrt_m[i + 1]);
        }
        // null mode of B is M^{1/2}·1
        let mut q0: Vec<f64> = sqrt_m.clone();
        let nrm = q0.iter().map(|x| x * x).sum::<f64>().sqrt();
        q0.iter_mut().for_each(|x| *x /= nrm);
        let delta = 1e-10;
        let mut v: Vec<f64> = xs.iter().map(|&x| x).collect(); // linear start, ⊥ constants roughly
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let proj_out = |v: &mut Vec<f64>, q: &[f64]| {
            let d = dot(v, q);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= d * y;
            }
        };
        proj_out(&mut v, &q0);
        let mut lambda = 0.0;
        for _ in 0..200 {
            // solve (B + delta I) y = v by the Thomas algorithm
            let mut c = vec![0.0; np - 1];
            let mut dd = vec![0.0; np];
            let mut y = vec![0.0; np];
            let mut beta = diag[0] + delta;
            dd[0] = v[0] / beta;
            for i in 1..np {
                c[i - 1] = off[i - 1] / beta;
                beta = diag[i] + delta - off[i - 1] * c[i - 1];
                dd[i] = (v[i] - off[i - 1] * dd[i - 1]) / beta;
            }
            y[np - 1] = dd[np - 1];
            for i in (0..np - 1).rev() {
                y[i] = dd[i] - c[i] * y[i + 1];
            }
            proj_out(&mut y, &q0);
            let nrm = dot(&y, &y).sqrt();
            if nrm == 0.0 {
                break;
            }
            y.iter_mut().for_each(|x| *x /= nrm);
            // Rayleigh quotient of B
            let mut by = vec![0.0; np];
            for i in 0..np {
                let mut s = diag[i] * y[i];
                if i > 0 {
                    s += off[i - 1] * y[i - 1];
                }
                if i < np - 1 {
                    s += off[i] * y[i + 1];
                }
                by[i] = s;
            }
            let new_lambda = dot(&y, &by);
            let done = (new_lambda - lambda).abs() <= 1e-12 * new_lambda.abs().max(1e-30);
            lambda = new_lambda;
            v = y;
            if done {
                break;
            }
        }
        1.0 / lambda.max(1e-300)
    };
    let sd = m.sigma_max2().sqrt();
    let c1 = est(9.0 * sd, 2000);
    let c2 = est(9.0 * sd, 4000);
    // Richardson-style guard: take the finer estimate plus the observed drift
    Ok(c2 + (c2 - c1).abs())
}
