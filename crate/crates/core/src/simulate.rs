//! Ensembles of the entropy-minimizing process and their per-node statistics.
//!
//! The bridge sampler draws the terminal point X₁ and an independent Gaussian
//! G once per path and evaluates X_t = t·X₁ + √(t(1−t))·G at every node, so
//! node marginals are exact and all 1/(1−t)-weighted time integrals are free
//! of discretization bias. The Euler–Maruyama sampler integrates the SDE
//! dX = v dt + dB directly and exists to validate the bridge picture.
//!
//! Per-path randomness comes from counter-indexed substreams of the master
//! seed, and all reductions run in path order, so results are byte-identical
//! regardless of thread count.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{sym_pack, sym_packed_len, sym_unpack, symmetrize};
use crate::measures::{Measure, MeasureKind};
use crate::posterior::posterior_moments;
use crate::rng::{standard_normal_vector, substream};

/// Number of path blocks used for batch-means standard errors.
pub const N_BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    Uniform,
    Geometric,
}

/// Strictly increasing time nodes on [0, 1−ε].
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    epsilon: f64,
    scheme: GridScheme,
}

impl TimeGrid {
    /// A grid of `n` nodes from 0 to 1−ε. The geometric scheme clusters
    /// towards t = 1 with 1−t_{k+1} = ρ(1−t_k), ρ = ε^{1/(n−1)}.
    pub fn new(scheme: GridScheme, n: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.01) {
            return Err(Error::InvalidArgument(format!(
                "epsilon {epsilon} outside (0, 0.01]"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 nodes".into()));
        }
        let last = 1.0 - epsilon;
        let nodes = match scheme {
            GridScheme::Uniform => (0..n).map(|k| last * k as f64 / (n - 1) as f64).collect(),
            GridScheme::Geometric => {
                let rho = epsilon.powf(1.0 / (n - 1) as f64);
                let mut v: Vec<f64> = (0..n).map(|k| 1.0 - rho.powi(k as i32)).collect();
                v[n - 1] = last;
                v
            }
        };
        Ok(TimeGrid {
            nodes,
            epsilon,
            scheme,
        })
    }

    /// Merge additional time points (diagnostic anchors) into the grid.
    /// Points outside [0, 1−ε) or within 1e-12 of an existing node are dropped.
    pub fn with_extra_nodes(&self, times: &[f64]) -> TimeGrid {
        let mut nodes = self.nodes.clone();
        for &t in times {
            if t >= 0.0 && t < 1.0 - self.epsilon {
                nodes.push(t);
            }
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        TimeGrid {
            nodes,
            epsilon: self.epsilon,
            scheme: self.scheme,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    /// Geometric contraction ratio, when the scheme is geometric.
    pub fn ratio(&self) -> Option<f64> {
        match self.scheme {
            GridScheme::Geometric => {
                Some(self.epsilon.powf(1.0 / (self.nodes.len() - 1) as f64))
            }
            GridScheme::Uniform => None,
        }
    }

    fn describe(&self) -> String {
        let mut s = format!("eps={:.17e};scheme={:?};nodes=", self.epsilon, self.scheme);
        for t in &self.nodes {
            s.push_str(&format!("{t:.17e},"));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMethod {
    Bridge,
    Euler,
}

/// Per-node samples in struct-of-arrays layout: path-major within each field.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSamples {
    /// States, n_paths × dim.
    pub xs: Vec<f64>,
    /// Packed symmetric Γ samples, n_paths × d(d+1)/2.
    pub gammas: Vec<f64>,
    /// Drift samples, n_paths × dim.
    pub vs: Vec<f64>,
}

/// Monte Carlo ensemble of (X_t, Γ_t, v_t) at every grid node.
#[derive(Clone, Debug)]
pub struct PathEnsemble {
    pub dim: usize,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub master_seed: u64,
    pub method: SimMethod,
    pub measure_fingerprint: String,
    pub nodes: Vec<NodeSamples>,
}

impl PathEnsemble {
    pub fn gamma_at(&self, node: usize, path: usize) -> DMatrix<f64> {
        let p = sym_packed_len(self.dim);
        sym_unpack(self.dim, &self.nodes[node].gammas[path * p..(path + 1) * p])
    }

    pub fn drift_at(&self, node: usize, path: usize) -> DVector<f64> {
        let d = self.dim;
        DVector::from_column_slice(&self.nodes[node].vs[path * d..(path + 1) * d])
    }

    /// Cache key for this ensemble's defining inputs.
    pub fn cache_key(
        fingerprint: &str,
        grid: &TimeGrid,
        n_paths: usize,
        seed: u64,
        method: SimMethod,
    ) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(b"stamlab-ensemble-v1;");
        h.update(fingerprint.as_bytes());
        h.update(grid.describe().as_bytes());
        h.update(format!(";n={n_paths};seed={seed};method={method:?}").as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-path node row: (x, packed gamma, v) contiguous per node.
fn row_len(d: usize) -> usize {
    2 * d + sym_packed_len(d)
}

/// Gaussian measures admit a state-independent posterior: precompute the
/// per-node Γ and the linear drift map to keep large ensembles cheap.
struct GaussianNodePlan {
    gamma_packed: Vec<f64>,
    /// v = drift_map · x
    drift_map: DMatrix<f64>,
}

fn gaussian_plans(m: &Measure, ts: &[f64]) -> Result<Vec<GaussianNodePlan>> {
    ts.iter()
        .map(|&t| {
            let st = posterior_moments(m, t, &DVector::zeros(m.dim))?;
            let mut packed = Vec::with_capacity(sym_packed_len(m.dim));
            sym_pack(&st.gamma, &mut packed);
            // mean = C·x/(1−t) ⇒ v = (C/(1−t)² − I/(1−t))·x
            let s = 1.0 - t;
            let map = &st.cov / (s * s) - DMatrix::<f64>::identity(m.dim, m.dim) / s;
            Ok(GaussianNodePlan {
                gamma_packed: packed,
                drift_map: map,
            })
        })
        .collect()
}

/// Exact-marginal sampler: X_t = t·X₁ + √(t(1−t))·G per node.
pub fn simulate_bridge(
    m: &Measure,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if n_paths < 100 {
        return Err(Error::InvalidArgument(
            "bridge ensembles need at least 100 paths".into(),
        ));
    }
    let d = m.dim;
    let ts = grid.nodes().to_vec();
    let x1s = m.sample(n_paths, seed)?;
    let plans = match &m.kind {
        MeasureKind::Gaussian { .. } => Some(gaussian_plans(m, &ts)?),
        _ => None,
    };

    let mut nodes: Vec<NodeSamples> = ts
        .iter()
        .map(|_| NodeSamples {
            xs: vec![0.0; n_paths * d],
            gammas: vec![0.0; n_paths * sym_packed_len(d)],
            vs: vec![0.0; n_paths * d],
        })
        .collect();

    let block = 4096usize;
    let rl = row_len(d);
    let mut start = 0usize;
    while start < n_paths {
        let end = (start + block).min(n_paths);
        let rows: Vec<Result<Vec<f64>>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, i as u64);
                let g = standard_normal_vector(&mut rng, d);
                let mut row = vec![0.0; ts.len() * rl];
                let mut xt = DVector::<f64>::zeros(d);
                for (k, &t) in ts.iter().enumerate() {
                    let w = (t * (1.0 - t)).sqrt();
                    for j in 0..d {
                        xt[j] = t * x1s[i][j] + w * g[j];
                    }
                    let out = &mut row[k * rl..(k + 1) * rl];
                    out[..d].copy_from_slice(xt.as_slice());
                    match &plans {
                        Some(plans) => {
                            let plan = &plans[k];
                            out[d..d + plan.gamma_packed.len()]
                                .copy_from_slice(&plan.gamma_packed);
                            let v = &plan.drift_map * &xt;
                            out[d + plan.gamma_packed.len()..].copy_from_slice(v.as_slice());
                        }
                        None => {
                            let st = posterior_moments(m, t, &xt)?;
                            let mut packed = Vec::with_capacity(sym_packed_len(d));
                            sym_pack(&st.gamma, &mut packed);
                            out[d..d + packed.len()].copy_from_slice(&packed);
                            out[d + packed.len()..].copy_from_slice(st.drift.as_slice());
                        }
                    }
                }
                Ok(row)
            })
            .collect();
        for (offset, row) in rows.into_iter().enumerate() {
            let row = row?;
            let i = start + offset;
            for k in 0..ts.len() {
                let r = &row[k * rl..(k + 1) * rl];
                let p = sym_packed_len(d);
                nodes[k].xs[i * d..(i + 1) * d].copy_from_slice(&r[..d]);
                nodes[k].gammas[i * p..(i + 1) * p].copy_from_slice(&r[d..d + p]);
                nodes[k].vs[i * d..(i + 1) * d].copy_from_slice(&r[d + p..]);
            }
        }
        start = end;
    }

    Ok(PathEnsemble {
        dim: d,
        grid: grid.clone(),
        n_paths,
        master_seed: seed,
        method: SimMethod::Bridge,
        measure_fingerprint: m.fingerprint(),
        nodes,
    })
}

/// Euler–Maruyama integration of dX = v(t, X)dt + dB on the grid nodes.
pub fn simulate_euler(
    m: &Measure,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if n_paths < 100 {
        return Err(Error::InvalidArgument(
            "euler ensembles need at least 100 paths".into(),
        ));
    }
    let d = m.dim;
    let ts = grid.nodes().to_vec();
    let plans = match &m.kind {
        MeasureKind::Gaussian { .. } => Some(gaussian_plans(m, &ts)?),
        _ => None,
    };

    let mut nodes: Vec<NodeSamples> = ts
        .iter()
        .map(|_| NodeSamples {
            xs: vec![0.0; n_paths * d],
            gammas: vec![0.0; n_paths * sym_packed_len(d)],
            vs: vec![0.0; n_paths * d],
        })
        .collect();

    let block = 4096usize;
    let rl = row_len(d);
    let mut start = 0usize;
    while start < n_paths {
        let end = (start + block).min(n_paths);
        let rows: Vec<Result<Vec<f64>>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, i as u64);
                let mut row = vec![0.0; ts.len() * rl];
                let mut x = DVector::<f64>::zeros(d);
                for (k, &t) in ts.iter().enumerate() {
                    let (gamma_packed, v) = match &plans {
                        Some(plans) => {
                            (plans[k].gamma_packed.clone(), &plans[k].drift_map * &x)
                        }
                        None => {
                            let st = posterior_moments(m, t, &x)?;
                            let mut packed = Vec::with_capacity(sym_packed_len(d));
                            sym_pack(&st.gamma, &mut packed);
                            (packed, st.drift)
                        }
                    };
                    let vnorm = v.norm();
                    if vnorm > 1e6 {
                        return Err(Error::DriftBlowup { t, norm: vnorm });
                    }
                    let out = &mut row[k * rl..(k + 1) * rl];
                    out[..d].copy_from_slice(x.as_slice());
                    out[d..d + gamma_packed.len()].copy_from_slice(&gamma_packed);
                    out[d + gamma_packed.len()..].copy_from_slice(v.as_slice());
                    if k + 1 < ts.len() {
                        let dt = ts[k + 1] - t;
                        let noise = standard_normal_vector(&mut rng, d);
                        x += dt * &v + dt.sqrt() * noise;
                    }
                }
                Ok(row)
            })
            .collect();
        for (offset, row) in rows.into_iter().enumerate() {
            let row = row?;
            let i = start + offset;
            for k in 0..ts.len() {
                let r = &row[k * rl..(k + 1) * rl];
                let p = sym_packed_len(d);
                nodes[k].xs[i * d..(i + 1) * d].copy_from_slice(&r[..d]);
                nodes[k].gammas[i * p..(i + 1) * p].copy_from_slice(&r[d..d + p]);
                nodes[k].vs[i * d..(i + 1) * d].copy_from_slice(&r[d + p..]);
            }
        }
        start = end;
    }

    Ok(PathEnsemble {
        dim: d,
        grid: grid.clone(),
        n_paths,
        master_seed: seed,
        method: SimMethod::Euler,
        measure_fingerprint: m.fingerprint(),
        nodes,
    })
}

// ----- moment curves ---------------------------------------------------------

/// Per-node means and batch-means standard errors.
#[derive(Clone, Debug)]
pub struct NodeMoments {
    pub t: f64,
    pub e_gamma: DMatrix<f64>,
    pub e_gamma_sq: DMatrix<f64>,
    /// E[Γ²] − E[Γ]² in the matrix sense.
    pub var_gamma: DMatrix<f64>,
    pub e_vv: DMatrix<f64>,
    pub e_vsq: f64,
    pub se_gamma: DMatrix<f64>,
    pub se_gamma_sq: DMatrix<f64>,
    pub se_vv: DMatrix<f64>,
    pub se_vsq: f64,
}

/// Batch means per node, kept so downstream integrals can form their own
/// batch-level statistics.
#[derive(Clone, Debug)]
pub struct NodeBatches {
    pub gamma: Vec<DMatrix<f64>>,
    pub gamma_sq: Vec<DMatrix<f64>>,
    pub vv: Vec<DMatrix<f64>>,
    pub vsq: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MomentCurve {
    pub dim: usize,
    pub n_paths: usize,
    pub ts: Vec<f64>,
    pub nodes: Vec<NodeMoments>,
    pub batches: Vec<NodeBatches>,
}

impl MomentCurve {
    pub fn n_batches(&self) -> usize {
        self.batches.first().map(|b| b.vsq.len()).unwrap_or(0)
    }

    /// CSV with columns t, EGamma_ij, VarGamma_ij, Evnorm2 and their
    /// standard-error columns.
    pub fn to_csv(&self) -> String {
        let d = self.dim;
        let mut s = String::from("t");
        for i in 0..d {
            for j in 0..d {
                s.push_str(&format!(",EGamma_{i}{j}"));
            }
        }
        for i in 0..d {
            for j in 0..d {
                s.push_str(&format!(",VarGamma_{i}{j}"));
            }
        }
        s.push_str(",Evnorm2");
        for i in 0..d {
            for j in 0..d {
                s.push_str(&format!(",se_EGamma_{i}{j}"));
            }
        }
        s.push_str(",se_Evnorm2\n");
        for nm in &self.nodes {
            s.push_str(&format!("{:.17e}", nm.t));
            for v in nm.e_gamma.iter() {
                s.push_str(&format!(",{v:.17e}"));
            }
            for v in nm.var_gamma.iter() {
                s.push_str(&format!(",{v:.17e}"));
            }
            s.push_str(&format!(",{:.17e}", nm.e_vsq));
            for v in nm.se_gamma.iter() {
                s.push_str(&format!(",{v:.17e}"));
            }
            s.push_str(&format!(",{:.17e}\n", nm.se_vsq));
        }
        s
    }
}

fn batch_ranges(n: usize) -> Vec<(usize, usize)> {
    let b = N_BATCHES.min(n.max(1));
    (0..b)
        .map(|k| (k * n / b, (k + 1) * n / b))
        .filter(|(a, c)| c > a)
        .collect()
}

/// Monte Carlo means with 20-block batch-means standard errors.
pub fn moment_curve(e: &PathEnsemble) -> MomentCurve {
    let d = e.dim;
    let p = sym_packed_len(d);
    let ranges = batch_ranges(e.n_paths);
    let per_node: Vec<(NodeMoments, NodeBatches)> = e
        .nodes
        .par_iter()
        .zip(e.grid.nodes().par_iter())
        .map(|(ns, &t)| {
            let mut bg: Vec<DMatrix<f64>> = Vec::with_capacity(ranges.len());
            let mut bg2: Vec<DMatrix<f64>> = Vec::with_capacity(ranges.len());
            let mut bvv: Vec<DMatrix<f64>> = Vec::with_capacity(ranges.len());
            let mut bvsq: Vec<f64> = Vec::with_capacity(ranges.len());
            for &(a, c) in &ranges {
                let mut sg = DMatrix::<f64>::zeros(d, d);
                let mut sg2 = DMatrix::<f64>::zeros(d, d);
                let mut svv = DMatrix::<f64>::zeros(d, d);
                let mut svsq = 0.0f64;
                for i in a..c {
                    let g = sym_unpack(d, &ns.gammas[i * p..(i + 1) * p]);
                    sg += &g;
                    sg2 += &g * &g;
                    let v = DVector::<f64>::from_column_slice(&ns.vs[i * d..(i + 1) * d]);
                    svv.ger(1.0, &v, &v, 1.0);
                    svsq += v.norm_squared();
                }
                let n = (c - a) as f64;
                bg.push(sg / n);
                bg2.push(symmetrize(&(sg2 / n)));
                bvv.push(svv / n);
                bvsq.push(svsq / n);
            }
            let counts: Vec<f64> = ranges.iter().map(|&(a, c)| (c - a) as f64).collect();
            let total: f64 = counts.iter().sum();
            let wmean_m = |xs: &[DMatrix<f64>]| {
                let mut acc = DMatrix::<f64>::zeros(d, d);
                for (x, w) in xs.iter().zip(&counts) {
                    acc += x * *w;
                }
                acc / total
            };
            let e_gamma = wmean_m(&bg);
            let e_gamma_sq = wmean_m(&bg2);
            let e_vv = wmean_m(&bvv);
            let e_vsq = bvsq.iter().zip(&counts).map(|(x, w)| x * w).sum::<f64>() / total;
            let var_gamma = symmetrize(&(&e_gamma_sq - &e_gamma * &e_gamma));
            let nb = counts.len() as f64;
            let se_m = |xs: &[DMatrix<f64>], mean: &DMatrix<f64>| {
                if xs.len() < 2 {
                    return DMatrix::<f64>::zeros(d, d);
                }
                let mut acc = DMatrix::<f64>::zeros(d, d);
                for x in xs {
                    let dm = x - mean;
                    acc += dm.component_mul(&dm);
                }
                (acc / (nb * (nb - 1.0))).map(f64::sqrt)
            };
            let se_gamma = se_m(&bg, &e_gamma);
            let se_gamma_sq = se_m(&bg2, &e_gamma_sq);
            let se_vv = se_m(&bvv, &e_vv);
            let se_vsq = if counts.len() >= 2 {
                (bvsq.iter().map(|x| (x - e_vsq).powi(2)).sum::<f64>() / (nb * (nb - 1.0))).sqrt()
            } else {
                0.0
            };
            (
                NodeMoments {
                    t,
                    e_gamma,
                    e_gamma_sq,
                    var_gamma,
                    e_vv,
                    e_vsq,
                    se_gamma,
                    se_gamma_sq,
                    se_vv,
                    se_vsq,
                },
                NodeBatches {
                    gamma: bg,
                    gamma_sq: bg2,
                    vv: bvv,
                    vsq: bvsq,
                },
            )
        })
        .collect();
    let (nodes, batches): (Vec<_>, Vec<_>) = per_node.into_iter().unzip();
    MomentCurve {
        dim: d,
        n_paths: e.n_paths,
        ts: e.grid.nodes().to_vec(),
        nodes,
        batches,
    }
}

// ----- columnar binary cache --------------------------------------------------

const CACHE_MAGIC: &[u8; 8] = b"STAMENS1";

/// Serialize an ensemble to the columnar binary cache format.
pub fn write_ensemble(e: &PathEnsemble, path: &Path) -> Result<()> {
    let header = serde_json::json!({
        "dim": e.dim,
        "n_paths": e.n_paths,
        "master_seed": e.master_seed,
        "method": e.method,
        "scheme": e.grid.scheme(),
        "n_nodes": e.grid.nodes().len(),
        "fingerprint": e.measure_fingerprint,
    });
    let hbytes = serde_json::to_vec(&header)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(CACHE_MAGIC)?;
    f.write_all(&(hbytes.len() as u64).to_le_bytes())?;
    f.write_all(&hbytes)?;
    // grid floats go through the binary section so the roundtrip is bit-exact
    f.write_all(&e.grid.epsilon().to_le_bytes())?;
    for t in e.grid.nodes() {
        f.write_all(&t.to_le_bytes())?;
    }
    for ns in &e.nodes {
        for col in [&ns.xs, &ns.gammas, &ns.vs] {
            for v in col {
                f.write_all(&v.to_le_bytes())?;
            }
        }
    }
    f.flush()?;
    Ok(())
}

/// Load an ensemble previously written by [`write_ensemble`].
pub fn read_ensemble(path: &Path) -> Result<PathEnsemble> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::ConfigInvalid("bad ensemble cache magic".into()));
    }
    let mut len = [0u8; 8];
    f.read_exact(&mut len)?;
    let mut hbytes = vec![0u8; u64::from_le_bytes(len) as usize];
    f.read_exact(&mut hbytes)?;
    let header: serde_json::Value = serde_json::from_slice(&hbytes)?;
    let dim = header["dim"].as_u64().unwrap() as usize;
    let n_paths = header["n_paths"].as_u64().unwrap() as usize;
    let master_seed = header["master_seed"].as_u64().unwrap();
    let method: SimMethod = serde_json::from_value(header["method"].clone())?;
    let scheme: GridScheme = serde_json::from_value(header["scheme"].clone())?;
    let n_nodes = header["n_nodes"].as_u64().unwrap() as usize;
    let fingerprint = header["fingerprint"].as_str().unwrap().to_string();
    let mut read_col = |len: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; len * 8];
        f.read_exact(&mut buf)?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let epsilon = read_col(1)?[0];
    let nodes_t = read_col(n_nodes)?;
    let grid = TimeGrid {
        nodes: nodes_t,
        epsilon,
        scheme,
    };
    let p = sym_packed_len(dim);
    let mut nodes = Vec::with_capacity(grid.nodes().len());
    for _ in 0..grid.nodes().len() {
        nodes.push(NodeSamples {
            xs: read_col(n_paths * dim)?,
            gammas: read_col(n_paths * p)?,
            vs: read_col(n_paths * dim)?,
        });
    }
    Ok(PathEnsemble {
        dim,
        grid,
        n_paths,
        master_seed,
        method,
        measure_fingerprint: fingerprint,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian1(v: f64) -> Measure {
        Measure::gaussian(DMatrix::from_element(1, 1, v)).unwrap()
    }

    #[test]
    fn grid_schemes() {
        let g = TimeGrid::new(GridScheme::Geometric, 200, 1e-4).unwrap();
        assert_eq!(g.nodes().len(), 200);
        assert_eq!(g.nodes()[0], 0.0);
        assert_relative_eq!(*g.nodes().last().unwrap(), 1.0 - 1e-4, epsilon = 1e-15);
        let rho = g.ratio().unwrap();
        for k in 1..g.nodes().len() - 1 {
            let r = (1.0 - g.nodes()[k + 1]) / (1.0 - g.nodes()[k]);
            assert_relative_eq!(r, rho, epsilon = 1e-9);
        }
        let u = TimeGrid::new(GridScheme::Uniform, 11, 1e-3).unwrap();
        assert_relative_eq!(u.nodes()[5], 0.5 * (1.0 - 1e-3), epsilon = 1e-15);
        assert!(TimeGrid::new(GridScheme::Uniform, 11, 0.5).is_err());
    }

    #[test]
    fn extra_nodes_are_merged_sorted() {
        let g = TimeGrid::new(GridScheme::Geometric, 50, 1e-3).unwrap();
        let g2 = g.with_extra_nodes(&[0.123456, 0.007, 2.0, -1.0]);
        assert!(g2.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g2.nodes().iter().any(|&t| (t - 0.123456).abs() < 1e-15));
        assert_eq!(g2.nodes().last(), g.nodes().last());
    }

    #[test]
    fn bridge_standard_gaussian_is_degenerate() {
        let m = Measure::gaussian(DMatrix::identity(1, 1)).unwrap();
        let grid = TimeGrid::new(GridScheme::Uniform, 6, 1e-3).unwrap();
        let e = simulate_bridge(&m, &grid, 200, 3).unwrap();
        for ns in &e.nodes {
            for &g in &ns.gammas {
                assert_relative_eq!(g, 1.0, epsilon = 1e-12);
            }
            for &v in &ns.vs {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bridge_matches_gamma_closed_form() {
        let m = gaussian1(2.0);
        let grid = TimeGrid::new(GridScheme::Uniform, 3, 1e-4).unwrap();
        let grid = grid.with_extra_nodes(&[0.5]);
        let e = simulate_bridge(&m, &grid, 2000, 17).unwrap();
        let curve = moment_curve(&e);
        let k = curve.ts.iter().position(|&t| (t - 0.5).abs() < 1e-12).unwrap();
        // Γ is deterministic for Gaussians: 2/(1+t) = 4/3
        assert_relative_eq!(curve.nodes[k].e_gamma[(0, 0)], 4.0 / 3.0, epsilon = 1e-10);
        assert!(curve.nodes[k].var_gamma[(0, 0)].abs() < 1e-12);
        // E‖v‖² = t(σ²−1)²/(1+t(σ²−1)) = 1/3 at t = 1/2, within 3 se
        let ev = curve.nodes[k].e_vsq;
        let se = curve.nodes[k].se_vsq;
        assert!((ev - 1.0 / 3.0).abs() < 3.0 * se, "{ev} vs 1/3 ± {se}");
    }

    #[test]
    fn bridge_centered_drift_mean() {
        let m = Measure::mixture(
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
        let grid = TimeGrid::new(GridScheme::Uniform, 5, 1e-3).unwrap();
        let e = simulate_bridge(&m, &grid, 4000, 5).unwrap();
        let curve = moment_curve(&e);
        for (k, nm) in curve.nodes.iter().enumerate() {
            // E[v_t] = E[X₁] = 0: check the mean drift via per-path storage
            let mean_v: f64 = e.nodes[k].vs.iter().sum::<f64>() / e.n_paths as f64;
            let se = (nm.e_vsq / e.n_paths as f64).sqrt().max(1e-12);
            assert!(mean_v.abs() < 4.0 * se, "node {k}: {mean_v} vs se {se}");
        }
    }

    #[test]
    fn euler_terminal_law() {
        let m = gaussian1(2.0);
        let grid = TimeGrid::new(GridScheme::Uniform, 101, 1e-3).unwrap();
        let e = simulate_euler(&m, &grid, 4000, 11).unwrap();
        let last = e.nodes.last().unwrap();
        let n = e.n_paths as f64;
        let var = last.xs.iter().map(|x| x * x).sum::<f64>() / n;
        // terminal variance ≈ σ² up to O(Δ) bias and MC noise
        assert!((var - 2.0).abs() < 0.15, "terminal var {var}");

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
        let e = simulate_euler(&mix, &grid, 1000, 11).unwrap();
        let last = e.nodes.last().unwrap();
        let mean = last.xs.iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() < 0.15, "terminal mean {mean}");
    }

    #[test]
    fn variance_identity_is_exact() {
        let m = gaussian1(0.5);
        let grid = TimeGrid::new(GridScheme::Geometric, 24, 1e-3).unwrap();
        let e = simulate_bridge(&m, &grid, 500, 23).unwrap();
        let c = moment_curve(&e);
        for nm in &c.nodes {
            let resid = (&nm.var_gamma - (&nm.e_gamma_sq - &nm.e_gamma * &nm.e_gamma)).amax();
            assert!(resid < 1e-10);
        }
    }

    #[test]
    fn ensembles_are_seed_deterministic() {
        let m = gaussian1(1.5);
        let grid = TimeGrid::new(GridScheme::Geometric, 16, 1e-3).unwrap();
        let a = simulate_bridge(&m, &grid, 300, 77).unwrap();
        let b = simulate_bridge(&m, &grid, 300, 77).unwrap();
        assert_eq!(a.nodes, b.nodes);
        let c = simulate_bridge(&m, &grid, 300, 78).unwrap();
        assert_ne!(a.nodes, c.nodes);
    }

    #[test]
    fn cache_roundtrip_is_exact() {
        let m = gaussian1(1.5);
        let grid = TimeGrid::new(GridScheme::Geometric, 8, 1e-3).unwrap();
        let e = simulate_bridge(&m, &grid, 150, 7).unwrap();
        let dir = std::env::temp_dir().join("stamlab-cache-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!(
            "{}.bin",
            PathEnsemble::cache_key(&e.measure_fingerprint, &grid, 150, 7, SimMethod::Bridge)
        ));
        write_ensemble(&e, &path).unwrap();
        let r = read_ensemble(&path).unwrap();
        assert_eq!(e.nodes, r.nodes);
        assert_eq!(e.grid, r.grid);
        std::fs::remove_file(path).unwrap();
    }
}
