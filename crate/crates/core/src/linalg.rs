//! Dense symmetric-matrix helpers shared across the crate.
//!
//! All matrix functions (square root, inverse, eigenvalue bounds) go through a
//! symmetric eigendecomposition with a relative eigenvalue floor, so that the
//! ill-conditioned posterior covariances showing up near t → 1 degrade to a
//! pseudo-inverse instead of producing NaNs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue floor used when inverting or square-rooting.
pub const EIG_REL_FLOOR: f64 = 1e-12;

/// Force exact symmetry: (M + Mᵀ)/2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = m.clone();
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            s[(i, j)] = a;
            s[(j, i)] = a;
        }
    }
    s
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let mut ev = symmetrize(m).symmetric_eigenvalues();
    let mut v: Vec<f64> = ev.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (i, x) in v.into_iter().enumerate() {
        ev[i] = x;
    }
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m)[0]
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let ev = sym_eigenvalues(m);
    ev[ev.len() - 1]
}

/// Largest absolute eigenvalue; the operator norm for symmetric matrices.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).iter().fold(0.0, |a, &x| a.max(x.abs()))
}

/// Apply `f` to the eigenvalues of a symmetric matrix.
pub fn sym_func(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let se = symmetrize(m).symmetric_eigen();
    let q = &se.eigenvectors;
    let d = DMatrix::from_diagonal(&se.eigenvalues.map(f));
    symmetrize(&(q * d * q.transpose()))
}

/// Symmetric PSD square root. Eigenvalues below zero are clamped to zero
/// (tolerance 1e-12 relative to the largest eigenvalue); more negative ones
/// are an error.
pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let se = symmetrize(m).symmetric_eigen();
    let lmax = se.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let tol = EIG_REL_FLOOR * lmax.max(1.0);
    if let Some(&bad) = se.eigenvalues.iter().find(|&&x| x < -tol) {
        return Err(Error::NotPositiveDefinite(bad));
    }
    let d = DMatrix::from_diagonal(&se.eigenvalues.map(|x| x.max(0.0).sqrt()));
    Ok(symmetrize(&(&se.eigenvectors * d * se.eigenvectors.transpose())))
}

/// Inverse of a symmetric positive definite matrix; eigenvalues below the
/// relative floor are pseudo-inverted (treated as absent) and the fallback is
/// reported through the returned flag.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    let se = symmetrize(m).symmetric_eigen();
    let lmax = se.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if lmax == 0.0 {
        return Err(Error::NotPositiveDefinite(0.0));
    }
    let floor = EIG_REL_FLOOR * lmax;
    if let Some(&bad) = se.eigenvalues.iter().find(|&&x| x < -floor) {
        return Err(Error::NotPositiveDefinite(bad));
    }
    let mut degenerate = false;
    let d = DMatrix::from_diagonal(&se.eigenvalues.map(|x| {
        if x <= floor {
            degenerate = true;
            0.0
        } else {
            1.0 / x
        }
    }));
    Ok((
        symmetrize(&(&se.eigenvectors * d * se.eigenvectors.transpose())),
        degenerate,
    ))
}

/// Inverse square root of an SPD matrix. Errors on eigenvalues below `min_eig`.
pub fn spd_inv_sqrt(m: &DMatrix<f64>, min_eig: f64) -> Result<DMatrix<f64>> {
    let se = symmetrize(m).symmetric_eigen();
    if let Some(&bad) = se.eigenvalues.iter().find(|&&x| x < min_eig) {
        return Err(Error::SingularCovariance(bad));
    }
    let d = DMatrix::from_diagonal(&se.eigenvalues.map(|x| 1.0 / x.sqrt()));
    Ok(symmetrize(&(&se.eigenvectors * d * se.eigenvectors.transpose())))
}

/// ln det of an SPD matrix.
pub fn spd_log_det(m: &DMatrix<f64>) -> Result<f64> {
    let ev = sym_eigenvalues(m);
    if ev[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite(ev[0]));
    }
    Ok(ev.iter().map(|x| x.ln()).sum())
}

/// Cholesky factor L with M = L Lᵀ.
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(symmetrize(m))
        .map(|c| c.l())
        .ok_or_else(|| Error::NotPositiveDefinite(min_eigenvalue(m)))
}

/// Relative entropy between centered Gaussians, D(N(0,A) || N(0,B)), in nats.
pub fn gaussian_relative_entropy(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let d = a.nrows() as f64;
    let (b_inv, _) = spd_inverse(b)?;
    let tr = (&b_inv * a).trace();
    let ld = spd_log_det(a)? - spd_log_det(b)?;
    Ok(0.5 * (tr - d - ld))
}

/// Squared 2-Wasserstein distance between centered Gaussians:
/// tr A + tr B − 2 tr (A^{1/2} B A^{1/2})^{1/2}.
pub fn gaussian_w2_squared(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let ra = spd_sqrt(a)?;
    let cross = spd_sqrt(&symmetrize(&(&ra * b * &ra)))?;
    Ok(a.trace() + b.trace() - 2.0 * cross.trace())
}

/// Pack the lower triangle of a symmetric d×d matrix, row-major.
pub fn sym_pack(m: &DMatrix<f64>, out: &mut Vec<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in 0..=i {
            out.push(m[(i, j)]);
        }
    }
}

/// Number of packed entries for dimension d.
pub fn sym_packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Unpack a lower triangle written by [`sym_pack`].
pub fn sym_unpack(d: usize, data: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in 0..=i {
            m[(i, j)] = data[k];
            m[(j, i)] = data[k];
            k += 1;
        }
    }
    m
}

/// Largest eigenvalue of a packed symmetric matrix (see [`sym_pack`]),
/// closed-form for d ≤ 2.
pub fn sym_packed_max_eig(d: usize, s: &[f64]) -> f64 {
    match d {
        1 => s[0],
        2 => {
            let (a, b, c) = (s[0], s[1], s[2]);
            0.5 * ((a + c) + ((a - c) * (a - c) + 4.0 * b * b).sqrt())
        }
        _ => max_eigenvalue(&sym_unpack(d, s)),
    }
}

/// Fast 2×2 SPD square root: √M = (M + √det·I) / √(tr M + 2√det).
/// Falls back to the eigendecomposition for other sizes.
pub fn spd_sqrt_fast(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match m.nrows() {
        1 => {
            if m[(0, 0)] < -EIG_REL_FLOOR {
                return Err(Error::NotPositiveDefinite(m[(0, 0)]));
            }
            Ok(DMatrix::from_element(1, 1, m[(0, 0)].max(0.0).sqrt()))
        }
        2 => {
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let tr = m[(0, 0)] + m[(1, 1)];
            if det < 0.0 || tr < 0.0 {
                return spd_sqrt(m); // near-singular: clamp via eigen path
            }
            let s = det.sqrt();
            let denom = (tr + 2.0 * s).sqrt();
            if denom <= 0.0 {
                return Ok(DMatrix::zeros(2, 2));
            }
            let mut r = m.clone();
            r[(0, 0)] += s;
            r[(1, 1)] += s;
            Ok(r / denom)
        }
        _ => spd_sqrt(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        let r = rows.len();
        let c = rows[0].len();
        DMatrix::from_fn(r, c, |i, j| rows[i][j])
    }

    #[test]
    fn sqrt_roundtrip() {
        let m = mat(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let r = spd_sqrt(&m).unwrap();
        assert_relative_eq!(&r * &r, m, epsilon = 1e-12);
        let rf = spd_sqrt_fast(&m).unwrap();
        assert_relative_eq!(&rf * &rf, m, epsilon = 1e-12);
    }

    #[test]
    fn inverse_and_logdet() {
        let m = mat(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let (inv, degenerate) = spd_inverse(&m).unwrap();
        assert!(!degenerate);
        assert_relative_eq!(&m * inv, DMatrix::identity(2, 2), epsilon = 1e-12);
        assert_relative_eq!(spd_log_det(&m).unwrap(), (2.0 * 1.0 - 0.25f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn not_positive_definite_rejected() {
        let m = mat(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(matches!(spd_sqrt(&m), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn gaussian_entropy_matches_scalar_form() {
        // (σ² − 1 − ln σ²)/2 in one dimension
        let a = DMatrix::from_element(1, 1, 2.0);
        let b = DMatrix::identity(1, 1);
        assert_relative_eq!(
            gaussian_relative_entropy(&a, &b).unwrap(),
            (2.0 - 1.0 - 2.0f64.ln()) / 2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn w2_between_scalar_gaussians() {
        // 1D: W2²(N(0,a), N(0,b)) = (√a − √b)²
        let a = DMatrix::from_element(1, 1, 2.0);
        let b = DMatrix::from_element(1, 1, 0.5);
        assert_relative_eq!(
            gaussian_w2_squared(&a, &b).unwrap(),
            (2.0f64.sqrt() - 0.5f64.sqrt()).powi(2),
            epsilon = 1e-12
        );
    }

    #[test]
    fn pack_unpack_roundtrip() {
        let m = mat(&[&[4.0, 1.0, 0.2], &[1.0, 3.0, -0.5], &[0.2, -0.5, 2.0]]);
        let mut buf = Vec::new();
        sym_pack(&m, &mut buf);
        assert_eq!(buf.len(), sym_packed_len(3));
        assert_eq!(sym_unpack(3, &buf), m);
    }
}
