//! Scenario orchestration: whiten (on request), simulate, estimate entropies,
//! assemble deficit reports with bound rows, run the diagnostic ledger, and
//! write every artifact (JSON report, CSV summaries, curve CSVs, plot data).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use stamlab::bounds::{self, BoundResult, CtRule};
use stamlab::diagnostics::{run_checks, run_pair_checks, CheckResult};
use stamlab::entropy::{
    convolution_entropy, relative_entropy_direct, relative_entropy_drift, relative_entropy_gamma,
    EntropyEstimate,
};
use stamlab::measures::joint_whiten;
use stamlab::report::{BoundRow, DeficitReport, GridInfo, Provenance, REPORT_SCHEMA_VERSION};
use stamlab::simulate::{
    moment_curve, read_ensemble, simulate_bridge, simulate_euler, write_ensemble, MomentCurve,
    PathEnsemble, SimMethod, TimeGrid,
};
use stamlab::{Error, Measure, Result};

use crate::config::ScenarioConfig;

/// Deterministic sub-seed derivation (splitmix64 on master ⊕ stream).
fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub paths_override: Option<usize>,
    pub epsilon_override: Option<f64>,
    pub use_cache: bool,
}

#[derive(Serialize)]
pub struct ScenarioDocument {
    #[serde(rename = "schemaVersion")]
    pub schema_version: u32,
    pub scenario: String,
    pub reports: Vec<DeficitReport>,
    pub checks: Vec<CheckResult>,
    #[serde(rename = "allPassed")]
    pub all_passed: bool,
}

#[derive(Serialize)]
struct EntropyRoutes {
    direct: EntropyEstimate,
    #[serde(rename = "driftEnergy")]
    drift_energy: EntropyEstimate,
    #[serde(rename = "gammaIdentity")]
    gamma_identity: EntropyEstimate,
    /// h(X) derived from the direct route.
    #[serde(rename = "differentialEntropy")]
    differential_entropy: f64,
}

struct SimulatedMeasure {
    measure: Measure,
    ensemble: PathEnsemble,
    curve: MomentCurve,
    d_direct: EntropyEstimate,
}

fn simulate_cached(
    m: &Measure,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    method: SimMethod,
    cache_dir: Option<&Path>,
) -> Result<PathEnsemble> {
    let key = PathEnsemble::cache_key(&m.fingerprint(), grid, n_paths, seed, method);
    if let Some(dir) = cache_dir {
        let path = dir.join(format!("{key}.bin"));
        if path.exists() {
            let e = read_ensemble(&path)?;
            if e.measure_fingerprint == m.fingerprint() && e.n_paths == n_paths {
                return Ok(e);
            }
        }
    }
    let e = match method {
        SimMethod::Bridge => simulate_bridge(m, grid, n_paths, seed)?,
        SimMethod::Euler => simulate_euler(m, grid, n_paths, seed)?,
    };
    if let Some(dir) = cache_dir {
        std::fs::create_dir_all(dir)?;
        write_ensemble(&e, &dir.join(format!("{key}.bin")))?;
    }
    Ok(e)
}

/// Diagnostic anchor times merged into the grid so the small-time checks can
/// evaluate at (or transport from near) their target times.
fn diagnostic_anchors(measures: &[&Measure]) -> Vec<f64> {
    let mut anchors = Vec::new();
    let mut ratios = Vec::new();
    for m in measures {
        if let Ok((cp, _)) = m.poincare_bound() {
            let s = 1.0 / (3.0 * (2.0 * cp + 1.0));
            anchors.push(s * s);
            anchors.push(s);
            ratios.push(cp / m.sigma_min2());
        }
    }
    if ratios.len() == measures.len() && !ratios.is_empty() {
        let cp = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let smin = measures
            .iter()
            .map(|m| m.sigma_min2())
            .fold(f64::MAX, f64::min);
        let xi = smin / (3.0 * (2.0 * cp + 1.0));
        anchors.push(xi * xi);
    }
    anchors
}

fn infer_ct_rule(mx: &Measure, my: &Measure) -> Result<CtRule> {
    match (mx.xi, my.xi) {
        (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Ok(CtRule::Uniform { xi: a.min(b) }),
        _ if mx.is_log_concave() && my.is_log_concave() => Ok(CtRule::LogConcave),
        _ => Err(Error::HypothesisViolated {
            bound: "jump-ct".into(),
            reason: "no c_t rule is declared by both measures".into(),
        }),
    }
}

pub struct ScenarioOutcome {
    pub document: ScenarioDocument,
    /// Uncertified comparison lines (printed, never gated on).
    pub display: Vec<String>,
}

pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioOutcome> {
    let master = opts.seed_override.unwrap_or(cfg.run.master_seed);
    let n_paths = opts.paths_override.unwrap_or(cfg.run.n_paths);
    let epsilon = opts.epsilon_override.unwrap_or(cfg.grid.epsilon);
    let method = match cfg.run.method.as_str() {
        "euler" => SimMethod::Euler,
        _ => SimMethod::Bridge,
    };
    let cache_dir = opts.use_cache.then(|| opts.out_dir.join("cache"));
    let cache_dir = cache_dir.as_deref();

    // ----- measures (optionally jointly whitened) -----
    let mx0 = cfg.measure_x.build("measure_x")?;
    let my0 = cfg.measure_y.build("measure_y")?;
    if mx0.dim != my0.dim {
        return Err(Error::ConfigInvalid(
            "measure_x/measure_y dimension mismatch".into(),
        ));
    }
    let (mx, my, whiten_map) = if cfg.run.whiten {
        let (a, b, map) = joint_whiten(&mx0, &my0)?;
        (a, b, Some(map))
    } else {
        (mx0, my0, None)
    };

    // ----- grid with diagnostic anchors -----
    let base_grid = TimeGrid::new(cfg.scheme()?, cfg.grid.nodes, epsilon)?;
    let grid = base_grid.with_extra_nodes(&diagnostic_anchors(&[&mx, &my]));

    // ----- ensembles and curves -----
    let seed_x = derive_seed(master, 1);
    let seed_y = derive_seed(master, 2);
    let eye = nalgebra::DMatrix::<f64>::identity(mx.dim, mx.dim);
    let build = |m: &Measure, seed: u64| -> Result<SimulatedMeasure> {
        let ensemble = simulate_cached(m, &grid, n_paths, seed, method, cache_dir)?;
        let curve = moment_curve(&ensemble);
        let d_direct = relative_entropy_direct(m, &eye)?;
        Ok(SimulatedMeasure {
            measure: m.clone(),
            ensemble,
            curve,
            d_direct,
        })
    };
    let sx = build(&mx, seed_x)?;
    let sy = build(&my, seed_y)?;

    // ----- λ-independent bound inputs, prepared once -----
    let requested = cfg.requested_bounds();
    let cor2_data: Option<Result<(MomentCurve, MomentCurve, f64)>> = requested
        .contains(&"cor2")
        .then(|| -> Result<(MomentCurve, MomentCurve, f64)> {
            let xi = match (mx.xi, my.xi) {
                (Some(a), Some(b)) if a > 0.0 && b > 0.0 => a.min(b),
                _ => {
                    return Err(Error::HypothesisViolated {
                        bound: "cor2".into(),
                        reason: "both measures must declare xi > 0".into(),
                    })
                }
            };
            let mxs = mx.scale(xi.sqrt())?;
            let mys = my.scale(xi.sqrt())?;
            let ex =
                simulate_cached(&mxs, &grid, n_paths, derive_seed(master, 3), method, cache_dir)?;
            let ey =
                simulate_cached(&mys, &grid, n_paths, derive_seed(master, 4), method, cache_dir)?;
            Ok((moment_curve(&ex), moment_curve(&ey), xi))
        });
    let thm3_data: Option<Result<(Measure, Measure, EntropyEstimate, EntropyEstimate)>> =
        requested.contains(&"thm3").then(|| {
            let already = (mx.covariance() + my.covariance() - &eye * 2.0).amax() <= 1e-6;
            if already {
                Ok((mx.clone(), my.clone(), sx.d_direct.clone(), sy.d_direct.clone()))
            } else {
                // the deficit is invariant under a common linear map, so the
                // bound may be evaluated on the whitened pair
                let (wx, wy, _) = joint_whiten(&mx, &my)?;
                let dwx = relative_entropy_direct(&wx, &eye)?;
                let dwy = relative_entropy_direct(&wy, &eye)?;
                Ok((wx, wy, dwx, dwy))
            }
        });

    // ----- per-λ deficit reports with bound rows -----
    let mut reports = Vec::new();
    for &lambda in &cfg.lambdas {
        if !(0.0 < lambda && lambda < 1.0) {
            return Err(Error::ConfigInvalid(format!("lambda {lambda} outside (0,1)")));
        }
        let d_conv = convolution_entropy(&mx, &my, lambda)?;
        let deficit =
            lambda * sx.d_direct.value + (1.0 - lambda) * sy.d_direct.value - d_conv.value;
        let mut rows = Vec::new();
        for name in &requested {
            let attempt: Result<BoundResult> = match *name {
                "lemma-jump" => bounds::jump_bound(&mx, &my, &sx.ensemble, &sy.ensemble, lambda),
                "jump-ct" => infer_ct_rule(&mx, &my).and_then(|rule| {
                    bounds::jump_bound_ct(&mx, &my, &sx.ensemble, &sy.ensemble, lambda, rule)
                }),
                "thm1" => bounds::thm1_rhs(&mx, &my, &sx.curve, &sy.curve, lambda),
                "cor2" => match cor2_data.as_ref().unwrap() {
                    Ok((cxs, cys, xi)) => bounds::cor2_rhs(&mx, &my, cxs, cys, lambda, *xi),
                    Err(e) => Err(clone_gate_error(e)),
                },
                "thm3" => match thm3_data.as_ref().unwrap() {
                    Ok((wx, wy, dwx, dwy)) => bounds::thm3_rhs(wx, wy, lambda, dwx, dwy),
                    Err(e) => Err(clone_gate_error(e)),
                },
                "thm4" => {
                    let cp = mx
                        .poincare_bound()
                        .and_then(|(a, _)| my.poincare_bound().map(|(b, _)| a.max(b)));
                    cp.and_then(|cp| {
                        bounds::thm4_rhs(&mx, &my, lambda, &sx.d_direct, &sy.d_direct, cp)
                    })
                }
                "thm5" => {
                    if my.is_standard_gaussian(1e-9) {
                        bounds::thm5_rhs(&mx, lambda, &sx.d_direct)
                    } else {
                        Err(Error::HypothesisViolated {
                            bound: "thm5".into(),
                            reason: "Y is not the standard Gaussian".into(),
                        })
                    }
                }
                "wasserstein-thm" => {
                    bounds::wasserstein_thm_rhs(&mx, &my, &sx.curve, &sy.curve, lambda)
                }
                other => Err(Error::ConfigInvalid(format!("unknown bound {other}"))),
            };
            match attempt {
                Ok(b) => rows.push(BoundRow::applicable(deficit, &b)),
                Err(Error::HypothesisViolated { reason, .. }) => {
                    rows.push(BoundRow::inapplicable(name, reason))
                }
                Err(Error::PoincareUnavailable(reason)) => {
                    rows.push(BoundRow::inapplicable(name, reason))
                }
                Err(e) => return Err(e),
            }
        }
        let mut seeds = BTreeMap::new();
        seeds.insert("master".to_string(), master);
        seeds.insert("ensembleX".to_string(), seed_x);
        seeds.insert("ensembleY".to_string(), seed_y);
        let mut fps = BTreeMap::new();
        fps.insert("measureX".to_string(), mx.fingerprint());
        fps.insert("measureY".to_string(), my.fingerprint());
        if let Some(map) = &whiten_map {
            fps.insert(
                "whitenMap".to_string(),
                format!("{:?}", map.as_slice()),
            );
        }
        reports.push(DeficitReport {
            schema_version: REPORT_SCHEMA_VERSION,
            lambda,
            d_x: sx.d_direct.clone(),
            d_y: sy.d_direct.clone(),
            d_conv,
            deficit,
            bounds: rows,
            provenance: Provenance {
                seeds,
                grid: GridInfo {
                    scheme: format!("{:?}", grid.scheme()).to_lowercase(),
                    nodes: grid.nodes().len(),
                    epsilon: grid.epsilon(),
                    n_paths,
                },
                measure_fingerprints: fps,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        });
    }

    // ----- diagnostics -----
    let mut checks = Vec::new();
    if cfg.run.checks {
        checks.extend(run_checks(&mx, &sx.ensemble, &sx.curve, &sx.d_direct)?);
        checks.extend(run_checks(&my, &sy.ensemble, &sy.curve, &sy.d_direct)?);
        checks.extend(run_pair_checks(
            &mx,
            &my,
            &sx.ensemble,
            &sy.ensemble,
            &sx.curve,
            &sy.curve,
            &sx.d_direct,
            &sy.d_direct,
        )?);
    }

    let all_bounds_ok = reports.iter().all(|r| r.all_margins_ok());
    let all_checks_ok = checks.iter().all(|c| c.passed);
    let document = ScenarioDocument {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: cfg.name.clone(),
        reports,
        checks,
        all_passed: all_bounds_ok && all_checks_ok,
    };
    let json = serde_json::to_string_pretty(&document)? + "\n";

    let mut summary_csv = String::from(stamlab::report::SUMMARY_CSV_HEADER);
    for r in &document.reports {
        summary_csv.push_str(&r.summary_csv_rows(&cfg.name));
    }

    // ----- artifacts -----
    std::fs::create_dir_all(&opts.out_dir)?;
    std::fs::write(opts.out_dir.join("report.json"), &json)?;
    std::fs::write(opts.out_dir.join("summary.csv"), &summary_csv)?;
    write_curve_files(&opts.out_dir, "curve_x", &sx.curve)?;
    write_curve_files(&opts.out_dir, "curve_y", &sy.curve)?;
    write_deficit_plot_data(&opts.out_dir, &document)?;
    let routes = serde_json::json!({
        "measureX": entropy_routes(&sx)?,
        "measureY": entropy_routes(&sy)?,
    });
    std::fs::write(
        opts.out_dir.join("entropies.json"),
        serde_json::to_string_pretty(&routes)? + "\n",
    )?;
    std::fs::write(
        opts.out_dir.join("checks.json"),
        serde_json::to_string_pretty(&document.checks)? + "\n",
    )?;

    // display-only comparison: the entropy-jump value D/(8·C_p) for the
    // X = Y, λ = ½ configuration (prior-work reference line, not certified)
    let mut display = Vec::new();
    if mx.fingerprint() == my.fingerprint()
        && cfg.lambdas.iter().any(|&l| (l - 0.5).abs() < 1e-12)
    {
        if let Ok((cp, _)) = mx.poincare_bound() {
            display.push(format!(
                "entropy-jump reference (display only): D/(8·C_p) = {:.6e} with C_p ≤ {cp:.4}",
                bounds::entropy_jump_display(&sx.d_direct, cp)
            ));
        }
    }

    Ok(ScenarioOutcome { document, display })
}

fn entropy_routes(s: &SimulatedMeasure) -> Result<EntropyRoutes> {
    Ok(EntropyRoutes {
        differential_entropy: s
            .d_direct
            .differential_entropy(s.measure.covariance().trace(), s.measure.dim),
        direct: s.d_direct.clone(),
        drift_energy: relative_entropy_drift(&s.measure, &s.curve, &s.ensemble)?,
        gamma_identity: relative_entropy_gamma(&s.measure, &s.curve, &s.ensemble)?,
    })
}

/// Reproduce an applicability-gating error stored from the one-time prep.
fn clone_gate_error(e: &Error) -> Error {
    match e {
        Error::HypothesisViolated { bound, reason } => Error::HypothesisViolated {
            bound: bound.clone(),
            reason: reason.clone(),
        },
        Error::PoincareUnavailable(r) => Error::PoincareUnavailable(r.clone()),
        other => Error::ConfigInvalid(format!("bound preparation failed: {other}")),
    }
}

fn write_curve_files(dir: &Path, stem: &str, curve: &MomentCurve) -> Result<()> {
    let csv = curve.to_csv();
    std::fs::write(dir.join(format!("{stem}.csv")), &csv)?;
    // gnuplot-compatible: '#'-prefixed header, space-separated columns
    let mut dat = String::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 {
            dat.push_str(&format!("# {}\n", line.replace(',', " ")));
        } else {
            dat.push_str(&line.replace(',', " "));
            dat.push('\n');
        }
    }
    std::fs::write(dir.join(format!("{stem}.dat")), dat)?;
    Ok(())
}

fn write_deficit_plot_data(dir: &Path, doc: &ScenarioDocument) -> Result<()> {
    let mut dat = String::from("# lambda deficit");
    let names: Vec<&str> = doc
        .reports
        .first()
        .map(|r| r.bounds.iter().map(|b| b.name.as_str()).collect())
        .unwrap_or_default();
    for n in &names {
        dat.push_str(&format!(" rhs_{n}"));
    }
    dat.push('\n');
    for r in &doc.reports {
        dat.push_str(&format!("{:.17e} {:.17e}", r.lambda, r.deficit));
        for b in &r.bounds {
            match b.rhs {
                Some(v) => dat.push_str(&format!(" {v:.17e}")),
                None => dat.push_str(" nan"),
            }
        }
        dat.push('\n');
    }
    std::fs::write(dir.join("deficit_vs_lambda.dat"), dat)?;
    Ok(())
}

/// Re-render summary.csv and plot data from an existing report.json.
pub fn rerender(out_dir: &Path) -> Result<()> {
    let text = std::fs::read_to_string(out_dir.join("report.json"))?;
    let doc: serde_json::Value = serde_json::from_str(&text)?;
    let scenario = doc["scenario"].as_str().unwrap_or("scenario").to_string();
    let mut csv = String::from(stamlab::report::SUMMARY_CSV_HEADER);
    let mut dat = String::new();
    let reports = doc["reports"].as_array().cloned().unwrap_or_default();
    let mut names: Vec<String> = Vec::new();
    for (ri, r) in reports.iter().enumerate() {
        let lambda = r["lambda"].as_f64().unwrap_or(f64::NAN);
        let deficit = r["deficit"].as_f64().unwrap_or(f64::NAN);
        if ri == 0 {
            dat.push_str("# lambda deficit");
            for b in r["bounds"].as_array().cloned().unwrap_or_default() {
                let n = b["name"].as_str().unwrap_or("?").to_string();
                dat.push_str(&format!(" rhs_{n}"));
                names.push(n);
            }
            dat.push('\n');
        }
        dat.push_str(&format!("{lambda:.17e} {deficit:.17e}"));
        for b in r["bounds"].as_array().cloned().unwrap_or_default() {
            let name = b["name"].as_str().unwrap_or("?");
            let rhs = b["rhs"].as_f64();
            let margin = b["margin"].as_f64();
            let applicable = b["applicable"].as_bool().unwrap_or(false);
            csv.push_str(&format!(
                "{scenario},{lambda:.17e},{deficit:.17e},{name},{},{},{applicable}\n",
                rhs.map(|v| format!("{v:.17e}")).unwrap_or_default(),
                margin.map(|v| format!("{v:.17e}")).unwrap_or_default(),
            ));
            match rhs {
                Some(v) => dat.push_str(&format!(" {v:.17e}")),
                None => dat.push_str(" nan"),
            }
        }
        dat.push('\n');
    }
    std::fs::write(out_dir.join("summary.csv"), csv)?;
    std::fs::write(out_dir.join("deficit_vs_lambda.dat"), dat)?;
    Ok(())
}
