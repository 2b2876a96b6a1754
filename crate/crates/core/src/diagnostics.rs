//! A named, runnable property suite binding the intermediate identities and
//! inequalities of the construction to ensemble-level checks.
//!
//! Every check reduces to a single scalar: `statistic` is the worst observed
//! violation after subtracting its allowance (3·stderr plus deterministic
//! discretization terms), so `passed ⇔ statistic ≤ threshold` with
//! threshold 0. Identity checks use the worst normalized deviation over all
//! grid nodes; matrix inequalities reduce to extreme eigenvalues.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::entropy::EntropyEstimate;
use crate::error::Result;
use crate::linalg::{max_eigenvalue, min_eigenvalue, sym_packed_len, symmetrize};
use crate::measures::Measure;
use crate::quad::trapezoid;
use crate::simulate::{MomentCurve, PathEnsemble};

#[derive(Clone, Debug, Serialize)]
pub struct CheckContext {
    pub measure_fingerprint: String,
    pub grid_nodes: usize,
    pub n_paths: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    #[serde(rename = "checkName")]
    pub check_name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub context: CheckContext,
}

fn result(name: &str, statistic: f64, ctx: &CheckContext) -> CheckResult {
    CheckResult {
        check_name: name.to_string(),
        statistic,
        threshold: 0.0,
        passed: statistic <= 0.0,
        context: ctx.clone(),
    }
}

/// Derivative of the Lagrange interpolant through `xs` at node index `i`.
fn lagrange_derivative_at(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    let n = xs.len();
    let mut d = 0.0;
    for j in 0..n {
        if j == i {
            let w: f64 = (0..n).filter(|&m| m != i).map(|m| 1.0 / (xs[i] - xs[m])).sum();
            d += w * ys[i];
        } else {
            let mut num = 1.0;
            let mut den = 1.0;
            for m in 0..n {
                if m != i && m != j {
                    num *= xs[i] - xs[m];
                }
                if m != j {
                    den *= xs[j] - xs[m];
                }
            }
            d += num / den * ys[j];
        }
    }
    d
}

/// Three-point derivative on a non-uniform grid, exact for quadratics, with
/// an error estimate from the disagreement with the cubic stencil (which
/// captures the leading f''' term) plus a rounding term for tiny spacings.
/// `mean_len` is the number of summands behind each node value: accumulation
/// rounding in a length-n mean grows like √n·ε and the 1/h coefficients
/// amplify it.
fn central_derivative(ts: &[f64], ys: &[f64], k: usize, mean_len: usize) -> (f64, f64) {
    let (h0, h1) = (ts[k] - ts[k - 1], ts[k + 1] - ts[k]);
    let d = lagrange_derivative_at(&ts[k - 1..k + 2], &ys[k - 1..k + 2], 1);
    let trunc = if k + 2 < ts.len() {
        let d4 = lagrange_derivative_at(&ts[k - 1..k + 3], &ys[k - 1..k + 3], 1);
        (d - d4).abs() * 3.0
    } else if k >= 2 {
        let d4 = lagrange_derivative_at(&ts[k - 2..k + 2], &ys[k - 2..k + 2], 2);
        (d - d4).abs() * 3.0
    } else {
        f64::INFINITY
    };
    // cancellation in the stencil itself dominates once spacings get tiny
    let scale = ys[k - 1].abs().max(ys[k].abs()).max(ys[k + 1].abs());
    let round = (32.0 + 4.0 * (mean_len as f64).sqrt()) * f64::EPSILON
        * scale
        * (1.0 / h0 + 1.0 / h1);
    (d, trunc + round)
}

/// Worst violation over (violation, allowance) pairs. A 1e-12 floor on the
/// allowance absorbs rounding fuzz in exactly-degenerate cases.
fn worst(viols: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    viols
        .into_iter()
        .map(|(v, a)| v - a - 1e-12)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The single-measure check suite over one ensemble, its moment curve and the
/// headline entropy estimate.
pub fn run_checks(
    m: &Measure,
    e: &PathEnsemble,
    curve: &MomentCurve,
    d_est: &EntropyEstimate,
) -> Result<Vec<CheckResult>> {
    let ctx = CheckContext {
        measure_fingerprint: e.measure_fingerprint.clone(),
        grid_nodes: e.grid.nodes().len(),
        n_paths: e.n_paths,
        seed: e.master_seed,
    };
    let dim = m.dim;
    let ts = &curve.ts;
    let nn = ts.len();
    let cov = m.covariance().clone();
    let eye = DMatrix::<f64>::identity(dim, dim);
    let mut out = Vec::new();

    // --- conditional-covariance ODE: d/dt E[Γ] = (E[Γ] − E[Γ²])/(1−t)
    {
        let mut viols = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                let ys: Vec<f64> = curve.nodes.iter().map(|nm| nm.e_gamma[(i, j)]).collect();
                for k in 1..nn - 1 {
                    let (deriv, fd_err) = central_derivative(ts, &ys, k, curve.n_paths);
                    let nm = &curve.nodes[k];
                    let rhs = (nm.e_gamma[(i, j)] - nm.e_gamma_sq[(i, j)]) / (1.0 - ts[k]);
                    // stderr of the stencil plus of the right side
                    let (h0, h1) = (ts[k] - ts[k - 1], ts[k + 1] - ts[k]);
                    let se = curve.nodes[k - 1].se_gamma[(i, j)] * (h1 / (h0 * (h0 + h1)))
                        + curve.nodes[k].se_gamma[(i, j)] * ((h1 - h0) / (h0 * h1)).abs()
                        + curve.nodes[k + 1].se_gamma[(i, j)] * (h0 / (h1 * (h0 + h1)))
                        + (nm.se_gamma[(i, j)] + nm.se_gamma_sq[(i, j)]) / (1.0 - ts[k]);
                    viols.push(((deriv - rhs).abs(), 3.0 * se + fd_err));
                }
            }
        }
        out.push(result("gamma-ode", worst(viols), &ctx));
    }

    // --- drift-covariance identity: E[v⊗v] = (I−E[Γ])/(1−t) + Cov − I
    {
        let shift = &cov - &eye;
        let mut viols = Vec::new();
        for (k, nm) in curve.nodes.iter().enumerate() {
            let t = ts[k];
            let expect = (&eye - &nm.e_gamma) / (1.0 - t) + &shift;
            let dev = (&nm.e_vv - &expect).amax();
            let se = nm.se_vv.amax() + nm.se_gamma.amax() / (1.0 - t);
            viols.push((dev, 3.0 * se + 1e-10));
        }
        out.push(result("drift-covariance-identity", worst(viols), &ctx));
    }

    // --- almost-sure caps on Γ
    {
        let p = sym_packed_len(dim);
        let mut worst_logconcave = f64::NEG_INFINITY;
        let mut worst_uniform = f64::NEG_INFINITY;
        let xi = m.xi.unwrap_or(0.0);
        for (k, &t) in ts.iter().enumerate() {
            let ns = &e.nodes[k];
            let mut node_max = f64::NEG_INFINITY;
            for i in 0..e.n_paths {
                node_max = node_max.max(crate::linalg::sym_packed_max_eig(
                    dim,
                    &ns.gammas[i * p..(i + 1) * p],
                ));
            }
            if t > 0.0 {
                worst_logconcave = worst_logconcave.max(node_max * t - 1.0);
            }
            if xi > 0.0 {
                worst_uniform = worst_uniform.max(node_max * ((1.0 - t) * xi + t) - 1.0);
            }
        }
        if m.is_log_concave() {
            out.push(result(
                "gamma-upper-logconcave",
                worst_logconcave - 1e-8,
                &ctx,
            ));
        }
        if xi > 0.0 {
            out.push(result("gamma-upper-uniform", worst_uniform - 1e-8, &ctx));
        }
    }

    // --- E[Γ_t] ⪰ Cov(X) for 1-uniform measures
    if m.xi.map(|x| x >= 1.0 - 1e-12).unwrap_or(false) {
        let viols = curve.nodes.iter().map(|nm| {
            let gap = max_eigenvalue(&(&cov - &nm.e_gamma));
            (gap, 3.0 * nm.se_gamma.amax() * dim as f64)
        });
        out.push(result("gamma-lower-uniform", worst(viols), &ctx));
    }

    // --- Poincaré-controlled lower bound on E[Γ_t] for log-concave measures
    if m.is_log_concave() {
        if let Ok((cp, _)) = m.poincare_bound() {
            let s2 = m.sigma_min2();
            let ratio = 2.0 * cp / s2 + 1.0;
            let floor = s2.min(1.0) / 3.0;
            let viols = curve.nodes.iter().zip(ts).map(|(nm, &t)| {
                let b = floor * (1.0f64).min(1.0 / (t * ratio).max(1e-300));
                let gap = b - min_eigenvalue(&nm.e_gamma);
                (gap, 3.0 * nm.se_gamma.amax() * dim as f64)
            });
            out.push(result("gamma-lower-poincare", worst(viols), &ctx));
        }
    }

    // --- martingale monotonicity of E‖v_t‖²
    {
        let viols = (1..nn).map(|k| {
            let drop = curve.nodes[k - 1].e_vsq - curve.nodes[k].e_vsq;
            (
                drop,
                2.0 * (curve.nodes[k - 1].se_vsq + curve.nodes[k].se_vsq),
            )
        });
        out.push(result("drift-energy-monotone", worst(viols), &ctx));
    }

    // --- Poincaré differential inequality:
    //     E[v⊗v] ⪯ (t²C_p + t(1−t))·d/dt E[v⊗v]
    if let Ok((cp, _)) = m.poincare_bound() {
        let mut viols = Vec::new();
        for k in 1..nn - 1 {
            let t = ts[k];
            let coef = t * t * cp + t * (1.0 - t);
            let mut deriv = DMatrix::<f64>::zeros(dim, dim);
            let mut fd_total: f64 = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    let ys: Vec<f64> = curve.nodes.iter().map(|nm| nm.e_vv[(i, j)]).collect();
                    let (d_ij, fd) = central_derivative(ts, &ys, k, curve.n_paths);
                    deriv[(i, j)] = d_ij;
                    fd_total = fd_total.max(fd);
                }
            }
            let gap = symmetrize(&(coef * deriv - &curve.nodes[k].e_vv));
            let viol = -min_eigenvalue(&gap);
            let se = curve.nodes[k].se_vv.amax()
                + coef
                    * (curve.nodes[k - 1].se_vv.amax()
                        + curve.nodes[k].se_vv.amax()
                        + curve.nodes[k + 1].se_vv.amax())
                    / (ts[k + 1] - ts[k]).min(ts[k] - ts[k - 1]);
            viols.push((viol, 3.0 * se + coef * fd_total * dim as f64));
        }
        out.push(result("drift-energy-diffineq", worst(viols), &ctx));
    }

    // --- two-sided Grönwall comparison of E‖v_t‖² around sampled anchors
    if let Ok((cp, _)) = m.poincare_bound() {
        let phi: Vec<f64> = curve.nodes.iter().map(|nm| nm.e_vsq).collect();
        let ses: Vec<f64> = curve.nodes.iter().map(|nm| nm.se_vsq).collect();
        let mut viols = Vec::new();
        for anchor_frac in [0.25, 0.5, 0.75] {
            let k0 = ((nn - 1) as f64 * anchor_frac) as usize;
            let t0 = ts[k0];
            if t0 <= 0.0 {
                continue;
            }
            let h = |t: f64| (t0 * (cp - 1.0) * t + t) / (t0 * (cp - 1.0) * t + t0);
            for k in 1..nn {
                let bound = phi[k0] * h(ts[k]);
                let se = 3.0 * (ses[k] + ses[k0] * h(ts[k]));
                if ts[k] >= t0 {
                    viols.push((bound - phi[k], se));
                } else {
                    viols.push((phi[k] - bound, se));
                }
            }
        }
        out.push(result("drift-energy-gronwall", worst(viols), &ctx));
    }

    // --- small-time drift energy: E‖v_{s²}‖² < (s/2)·D at s = 1/(3(2C_p+1)).
    //     Off-grid times are bridged from the nearest node above through the
    //     two-sided Grönwall comparison (an equality for Gaussians).
    if let Ok((cp, _)) = m.poincare_bound() {
        let transported = |target: f64| -> Option<(f64, f64)> {
            let k = ts.iter().position(|&t| t >= target - 1e-12)?;
            let t0 = ts[k];
            if t0 <= 0.0 {
                return Some((curve.nodes[k].e_vsq, curve.nodes[k].se_vsq));
            }
            let h = (t0 * (cp - 1.0) * target + target) / (t0 * (cp - 1.0) * target + t0);
            Some((curve.nodes[k].e_vsq * h, curve.nodes[k].se_vsq * h))
        };
        let s = 1.0 / (3.0 * (2.0 * cp + 1.0));
        if let Some((phi, se)) = transported(s * s) {
            let viol = phi - 0.5 * s * d_est.value;
            let allow = 3.0 * se + 0.5 * s * d_est.budget() + 1e-12;
            out.push(result("small-time-drift-energy", viol - allow, &ctx));
        }
        // isotropic variant at t = s with the ½·D cap
        if m.is_isotropic(1e-6) {
            if let Some((phi, se)) = transported(s) {
                let viol = phi - 0.5 * d_est.value;
                let allow = 3.0 * se + 0.5 * d_est.budget() + 1e-12;
                out.push(result("small-time-drift-energy-unit", viol - allow, &ctx));
            }
        }
    }

    // --- crude martingale cap: E‖v_s‖² ≤ 2D/(1−s)
    {
        let viols = curve.nodes.iter().zip(ts).map(|(nm, &t)| {
            let cap = 2.0 * d_est.value / (1.0 - t);
            (
                nm.e_vsq - cap,
                3.0 * nm.se_vsq + 2.0 * d_est.budget() / (1.0 - t),
            )
        });
        out.push(result("drift-energy-crude-cap", worst(viols), &ctx));
    }

    // --- truncation sandwich: (1−t₀)·D ≤ ½∫_{t₀}^1 E‖v‖² ≤ D at sampled t₀
    {
        let phi: Vec<f64> = curve.nodes.iter().map(|nm| 0.5 * nm.e_vsq).collect();
        let nb = curve.n_batches();
        let mut viols = Vec::new();
        for anchor_frac in [0.0, 0.3, 0.7] {
            let k0 = ((nn - 1) as f64 * anchor_frac) as usize;
            let t0 = ts[k0];
            let partial = trapezoid(&ts[k0..], &phi[k0..]);
            // batch-means stderr of the partial integral itself
            let se_int = if nb >= 2 {
                let ints: Vec<f64> = (0..nb)
                    .map(|b| {
                        let ys: Vec<f64> = curve.batches[k0..]
                            .iter()
                            .map(|nb_| 0.5 * nb_.vsq[b])
                            .collect();
                        trapezoid(&ts[k0..], &ys)
                    })
                    .collect();
                let mean = ints.iter().sum::<f64>() / nb as f64;
                (ints.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
                    / (nb as f64 * (nb - 1) as f64))
                    .sqrt()
            } else {
                0.0
            };
            let upper = partial; // tail only adds mass
            let lower = partial + d_est.tail_bound;
            let slack = d_est.budget() + 3.0 * se_int + 2e-3 * (1.0 + d_est.value);
            viols.push(((1.0 - t0) * d_est.value - lower, slack));
            viols.push((upper - d_est.value, slack));
        }
        out.push(result("partial-energy-sandwich", worst(viols), &ctx));
    }

    // --- route agreement: the two ensemble estimators against the headline D
    {
        let drift = crate::entropy::relative_entropy_drift(m, curve, e)?;
        let gamma = crate::entropy::relative_entropy_gamma(m, curve, e)?;
        let slack = 2e-3 * (1.0 + d_est.value);
        out.push(result(
            "route-agreement-drift",
            (drift.value - d_est.value).abs() - (drift.budget() + d_est.budget() + slack),
            &ctx,
        ));
        out.push(result(
            "route-agreement-gamma",
            (gamma.value - d_est.value).abs() - (gamma.budget() + d_est.budget() + slack),
            &ctx,
        ));
    }

    out.sort_by(|a, b| a.check_name.cmp(&b.check_name));
    Ok(out)
}

/// Pair checks on whitened log-concave pairs: the negative-eigenvalue
/// covariance observation and the partial-variance lower bound.
pub fn run_pair_checks(
    mx: &Measure,
    my: &Measure,
    ex: &PathEnsemble,
    ey: &PathEnsemble,
    cx: &MomentCurve,
    cy: &MomentCurve,
    d_x: &EntropyEstimate,
    d_y: &EntropyEstimate,
) -> Result<Vec<CheckResult>> {
    let ctx = CheckContext {
        measure_fingerprint: format!("{}+{}", ex.measure_fingerprint, ey.measure_fingerprint),
        grid_nodes: ex.grid.nodes().len(),
        n_paths: ex.n_paths,
        seed: ex.master_seed,
    };
    let dim = mx.dim;
    let eye = DMatrix::<f64>::identity(dim, dim);
    let ts = &cx.ts;
    let mut out = Vec::new();

    let whitened =
        (mx.covariance() + my.covariance() - &eye * 2.0).amax() <= 1e-6;

    // --- negative eigenvalues of I−E[Γ^X] force unit covariance directions
    if whitened {
        let mut viols = Vec::new();
        for (m, c) in [(mx, cx), (my, cy)] {
            for nm in &c.nodes {
                let gap = symmetrize(&(&eye - &nm.e_gamma));
                let se = nm.se_gamma.amax() * dim as f64;
                let eig = gap.symmetric_eigen();
                for (idx, &l) in eig.eigenvalues.iter().enumerate() {
                    if l <= 0.0 {
                        let w = eig.eigenvectors.column(idx);
                        let q = (w.transpose() * m.covariance() * w)[(0, 0)];
                        viols.push((1.0 - q, 3.0 * se));
                    }
                }
            }
        }
        out.push(result("negative-eig-covariance", worst(viols), &ctx));
    }

    // --- partial-variance bound:
    //     Tr ∫_{ξ²}^1 E[(Γ^X−Γ^Y)²]/(1−t) dt ≥ ξ·(D_X + D_Y)
    if whitened && mx.is_log_concave() && my.is_log_concave() {
        let (cpx, _) = mx.poincare_bound()?;
        let (cpy, _) = my.poincare_bound()?;
        let (sx2, sy2) = (mx.sigma_min2(), my.sigma_min2());
        let cp = (cpx / sx2).max(cpy / sy2);
        let xi = sx2.min(sy2) / (3.0 * (2.0 * cp + 1.0));
        let t_from = xi * xi;
        // E[(A−B)²] for independent A, B from the two curves
        let integrand: Vec<f64> = cx
            .nodes
            .iter()
            .zip(cy.nodes.iter())
            .zip(ts)
            .map(|((nx, ny), &t)| {
                let m = &nx.e_gamma_sq + &ny.e_gamma_sq
                    - &nx.e_gamma * &ny.e_gamma
                    - &ny.e_gamma * &nx.e_gamma;
                m.trace() / (1.0 - t)
            })
            .collect();
        let k0 = ts.iter().position(|&t| t >= t_from - 1e-12).unwrap_or(0);
        let lhs = trapezoid(&ts[k0..], &integrand[k0..]);
        let rhs = xi * (d_x.value + d_y.value);
        let nb = cx.n_batches().min(cy.n_batches());
        let se = if nb >= 2 {
            let ints: Vec<f64> = (0..nb)
                .map(|b| {
                    let ys: Vec<f64> = cx
                        .batches
                        .iter()
                        .zip(cy.batches.iter())
                        .zip(ts)
                        .map(|((bx, by), &t)| {
                            let m = &bx.gamma_sq[b] + &by.gamma_sq[b]
                                - &bx.gamma[b] * &by.gamma[b]
                                - &by.gamma[b] * &bx.gamma[b];
                            m.trace() / (1.0 - t)
                        })
                        .collect();
                    trapezoid(&ts[k0..], &ys[k0..])
                })
                .collect();
            let mean = ints.iter().sum::<f64>() / nb as f64;
            (ints.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
                / (nb as f64 * (nb - 1) as f64))
                .sqrt()
        } else {
            0.0
        };
        let allow = 3.0 * se + xi * (d_x.budget() + d_y.budget());
        out.push(result(
            "cross-gamma-partial-variance",
            rhs - lhs - allow,
            &ctx,
        ));
    }

    // --- truncation identity between the cross integral and drift energies
    {
        let phi_x: Vec<f64> = cx.nodes.iter().map(|nm| nm.e_vsq).collect();
        let phi_y: Vec<f64> = cy.nodes.iter().map(|nm| nm.e_vsq).collect();
        let k0 = ts.len() / 2;
        let t0 = ts[k0];
        let cross: Vec<f64> = cx
            .nodes
            .iter()
            .zip(cy.nodes.iter())
            .zip(ts)
            .map(|((nx, ny), &t)| {
                let m = &nx.e_gamma_sq + &ny.e_gamma_sq
                    - &nx.e_gamma * &ny.e_gamma
                    - &ny.e_gamma * &nx.e_gamma;
                m.trace() / (1.0 - t)
            })
            .collect();
        let lhs = trapezoid(&ts[k0..], &cross[k0..]);
        let energy: Vec<f64> = phi_x.iter().zip(&phi_y).map(|(a, b)| a + b).collect();
        let prod: Vec<f64> = cx
            .nodes
            .iter()
            .zip(cy.nodes.iter())
            .zip(ts)
            .map(|((nx, ny), &t)| {
                let mxm = &eye - &nx.e_gamma;
                let mym = &eye - &ny.e_gamma;
                2.0 * (&mxm * &mym).trace() / (1.0 - t)
            })
            .collect();
        let rhs = trapezoid(&ts[k0..], &energy[k0..])
            - (1.0 - t0) * (phi_x[k0] + phi_y[k0])
            - trapezoid(&ts[k0..], &prod[k0..]);
        let eps = ex.grid.epsilon();
        let se_proxy: f64 = cx.nodes[k0].se_vsq + cy.nodes[k0].se_vsq;
        let allow = 3.0 * se_proxy
            + 4.0 * eps * (1.0 + d_x.value + d_y.value)
            + 4.0 * (d_x.tail_bound + d_y.tail_bound)
            + 2e-3 * (1.0 + lhs.abs());
        out.push(result("truncation-identity", (lhs - rhs).abs() - allow, &ctx));
    }

    out.sort_by(|a, b| a.check_name.cmp(&b.check_name));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::relative_entropy_direct;
    use crate::simulate::{moment_curve, simulate_bridge, GridScheme, TimeGrid};

    fn gaussian1(v: f64) -> Measure {
        Measure::gaussian(DMatrix::from_element(1, 1, v)).unwrap()
    }

    #[test]
    fn standard_gaussian_passes_everything() {
        let m = Measure::gaussian(DMatrix::identity(1, 1)).unwrap();
        let grid = TimeGrid::new(GridScheme::Geometric, 60, 1e-3).unwrap();
        let e = simulate_bridge(&m, &grid, 2000, 9).unwrap();
        let c = moment_curve(&e);
        let d = relative_entropy_direct(&m, &DMatrix::identity(1, 1)).unwrap();
        let checks = run_checks(&m, &e, &c, &d).unwrap();
        assert!(!checks.is_empty());
        for ch in &checks {
            assert!(ch.passed, "{} failed: stat {}", ch.check_name, ch.statistic);
        }
    }

    #[test]
    fn gaussian_two_identity_checks_are_tight() {
        let m = gaussian1(2.0);
        let grid = TimeGrid::new(GridScheme::Geometric, 120, 1e-4).unwrap();
        let e = simulate_bridge(&m, &grid, 4000, 13).unwrap();
        let c = moment_curve(&e);
        let d = relative_entropy_direct(&m, &DMatrix::identity(1, 1)).unwrap();
        let checks = run_checks(&m, &e, &c, &d).unwrap();
        for name in [
            "gamma-ode",
            "drift-covariance-identity",
            "gamma-upper-logconcave",
            "gamma-upper-uniform",
            "drift-energy-monotone",
            "drift-energy-gronwall",
            "small-time-drift-energy",
            "drift-energy-crude-cap",
            "partial-energy-sandwich",
        ] {
            let ch = checks.iter().find(|c| c.check_name == name).unwrap();
            assert!(ch.passed, "{name}: statistic {}", ch.statistic);
        }
    }

    #[test]
    fn pair_checks_on_whitened_gaussians() {
        let mx = gaussian1(1.5);
        let my = gaussian1(0.5);
        let grid = TimeGrid::new(GridScheme::Geometric, 80, 1e-3).unwrap();
        let ex = simulate_bridge(&mx, &grid, 2000, 1).unwrap();
        let ey = simulate_bridge(&my, &grid, 2000, 2).unwrap();
        let cx = moment_curve(&ex);
        let cy = moment_curve(&ey);
        let eye = DMatrix::identity(1, 1);
        let dx = relative_entropy_direct(&mx, &eye).unwrap();
        let dy = relative_entropy_direct(&my, &eye).unwrap();
        let checks = run_pair_checks(&mx, &my, &ex, &ey, &cx, &cy, &dx, &dy).unwrap();
        for ch in &checks {
            assert!(ch.passed, "{}: statistic {}", ch.check_name, ch.statistic);
        }
        assert!(checks
            .iter()
            .any(|c| c.check_name == "cross-gamma-partial-variance"));
    }
}
