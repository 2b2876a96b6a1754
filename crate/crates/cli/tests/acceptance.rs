//! Acceptance suite, scenario-library half: the theorem ladder over the
//! bundled scenarios, the per-node eigenvalue checks on every log-concave
//! scenario, and bit-level reproducibility of reports.

use std::path::{Path, PathBuf};
use std::process::Command;

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn verdict(n: u32, ok: bool, detail: &str) {
    println!(
        "[criterion {n}] {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

fn run_scenario_to(
    config: &Path,
    out: &Path,
    extra: &[&str],
) -> (bool, serde_json::Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_stamlab"))
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .status()
        .expect("launch stamlab");
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("report.json")).expect("report.json"),
    )
    .expect("valid report json");
    (status.success(), report)
}

fn deficit_budget(r: &serde_json::Value) -> f64 {
    let lambda = r["lambda"].as_f64().unwrap();
    let bud = |e: &serde_json::Value| {
        2.0 * e["stderr"].as_f64().unwrap() + e["tailBound"].as_f64().unwrap()
    };
    lambda * bud(&r["dX"]) + (1.0 - lambda) * bud(&r["dY"]) + bud(&r["dConv"])
}

#[test]
fn criterion_4_6_9_scenario_library() {
    let dir = scenario_dir();
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("scenario dir")
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "toml").unwrap_or(false))
        .collect();
    files.sort();
    assert!(files.len() >= 8, "bundled library has {} scenarios", files.len());

    let tmp = tempfile::tempdir().unwrap();
    let mut ladder_ok = true;
    let mut detail = String::new();
    let mut thm5_certified = false;
    let mut eig_scenarios = 0;

    let required_lambdas = [0.1, 0.25, 0.5, 0.75, 0.9];
    for file in &files {
        let name = file.file_stem().unwrap().to_string_lossy().to_string();
        let out = tmp.path().join(&name);
        let (exit_ok, doc) = run_scenario_to(file, &out, &[]);
        ladder_ok &= exit_ok;
        let reports = doc["reports"].as_array().unwrap();
        // the required λ set is covered
        for want in required_lambdas {
            assert!(
                reports
                    .iter()
                    .any(|r| (r["lambda"].as_f64().unwrap() - want).abs() < 1e-12),
                "{name}: λ = {want} missing"
            );
        }
        let mut worst_margin: f64 = f64::INFINITY;
        for r in reports {
            let deficit = r["deficit"].as_f64().unwrap();
            let dbud = deficit_budget(r);
            for b in r["bounds"].as_array().unwrap() {
                if !b["applicable"].as_bool().unwrap() {
                    continue;
                }
                let margin = b["margin"].as_f64().unwrap();
                let bbud = b["budget"].as_f64().unwrap_or(0.0);
                ladder_ok &= margin >= -(dbud + bbud + 1e-12);
                worst_margin = worst_margin.min(margin);
                if b["name"] == "thm5" && margin > 0.0 {
                    thm5_certified = true;
                }
            }
            let _ = deficit;
        }
        detail.push_str(&format!("{name}: worst margin {worst_margin:+.1e}; "));

        // [criterion 6] eigenvalue checks on log-concave scenarios
        let checks = doc["checks"].as_array().unwrap();
        let eig_names = [
            "gamma-upper-logconcave",
            "gamma-upper-uniform",
            "gamma-lower-uniform",
            "gamma-lower-poincare",
        ];
        let mut saw_eig = false;
        for c in checks {
            let cname = c["checkName"].as_str().unwrap();
            if eig_names.contains(&cname) {
                saw_eig = true;
                assert!(
                    c["passed"].as_bool().unwrap(),
                    "{name}: {cname} failed with statistic {}",
                    c["statistic"]
                );
            }
        }
        if saw_eig {
            eig_scenarios += 1;
        }
    }

    // anchor values on the Gaussian pair
    let gp_out = tmp.path().join("gaussian-pair");
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(gp_out.join("report.json")).unwrap(),
    )
    .unwrap();
    let half = doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| (r["lambda"].as_f64().unwrap() - 0.5).abs() < 1e-12)
        .unwrap();
    let deficit = half["deficit"].as_f64().unwrap();
    ladder_ok &= (deficit - 0.11157177565710488).abs() <= 1e-4;
    for need in ["lemma-jump", "jump-ct", "thm3"] {
        let b = half["bounds"]
            .as_array()
            .unwrap()
            .iter()
            .find(|b| b["name"] == need)
            .unwrap();
        ladder_ok &= b["applicable"].as_bool().unwrap()
            && b["margin"].as_f64().unwrap() > 0.0;
    }
    // thm5 is reported but correctly inapplicable for this pair
    let t5 = half["bounds"]
        .as_array()
        .unwrap()
        .iter()
        .find(|b| b["name"] == "thm5")
        .unwrap();
    ladder_ok &= !t5["applicable"].as_bool().unwrap();
    ladder_ok &= thm5_certified;

    verdict(
        4,
        ladder_ok,
        &format!(
            "{} scenarios, gaussian-pair deficit {deficit:.6}; {detail}",
            files.len()
        ),
    );
    verdict(
        6,
        eig_scenarios >= 6,
        &format!("eigenvalue checks passed on {eig_scenarios} scenarios"),
    );
}

#[test]
fn criterion_9_reproducibility() {
    let dir = scenario_dir();
    let cfg = dir.join("gaussian-pair.toml");
    let tmp = tempfile::tempdir().unwrap();

    // identical (config, seed, version) ⇒ byte-identical reports
    let (ok_a, _) = run_scenario_to(&cfg, &tmp.path().join("a"), &["--no-cache"]);
    let (ok_b, _) = run_scenario_to(&cfg, &tmp.path().join("b"), &["--no-cache"]);
    let bytes_a = std::fs::read(tmp.path().join("a/report.json")).unwrap();
    let bytes_b = std::fs::read(tmp.path().join("b/report.json")).unwrap();
    let identical = bytes_a == bytes_b;

    // thread counts must not change any statistic
    let (ok_t1, _) = run_scenario_to(&cfg, &tmp.path().join("t1"), &["--no-cache", "--threads", "1"]);
    let (ok_t8, _) = run_scenario_to(&cfg, &tmp.path().join("t8"), &["--no-cache", "--threads", "8"]);
    let bytes_t1 = std::fs::read(tmp.path().join("t1/report.json")).unwrap();
    let bytes_t8 = std::fs::read(tmp.path().join("t8/report.json")).unwrap();
    let threads_identical = bytes_t1 == bytes_t8 && bytes_t1 == bytes_a;

    // cached rerun reproduces the fresh run exactly
    let (ok_c1, _) = run_scenario_to(&cfg, &tmp.path().join("c"), &[]);
    let (ok_c2, _) = run_scenario_to(&cfg, &tmp.path().join("c"), &[]);
    let bytes_c = std::fs::read(tmp.path().join("c/report.json")).unwrap();
    let cache_identical = bytes_c == bytes_a;

    verdict(
        9,
        ok_a && ok_b && ok_t1 && ok_t8 && ok_c1 && ok_c2
            && identical
            && threads_identical
            && cache_identical,
        &format!(
            "seed-identical: {identical}, threads 1 vs 8 identical: {threads_identical}, \
             cached rerun identical: {cache_identical}"
        ),
    );
}
