//! Versioned report documents: the per-λ deficit report with its bound rows,
//! and the CSV summary format. Serialization is deterministic (struct field
//! order, sorted maps), so identical runs produce byte-identical documents.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bounds::BoundResult;
use crate::entropy::EntropyEstimate;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One evaluated bound row: either an applicable RHS with its margin against
/// the measured deficit, or the violated hypothesis.
#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub name: String,
    pub rhs: Option<f64>,
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// deficit − rhs.
    pub margin: Option<f64>,
    /// 2·stderr + tail for the bound side alone.
    pub budget: Option<f64>,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundRow {
    pub fn applicable(deficit: f64, b: &BoundResult) -> Self {
        BoundRow {
            name: b.name.to_string(),
            rhs: Some(b.rhs),
            applicable: true,
            reason: None,
            margin: Some(deficit - b.rhs),
            budget: Some(b.budget()),
            inputs: b.inputs.clone(),
        }
    }

    pub fn inapplicable(name: &str, reason: String) -> Self {
        BoundRow {
            name: name.to_string(),
            rhs: None,
            applicable: false,
            reason: Some(reason),
            margin: None,
            budget: None,
            inputs: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridInfo {
    pub scheme: String,
    pub nodes: usize,
    pub epsilon: f64,
    #[serde(rename = "nPaths")]
    pub n_paths: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub seeds: BTreeMap<String, u64>,
    pub grid: GridInfo,
    #[serde(rename = "measureFingerprints")]
    pub measure_fingerprints: BTreeMap<String, String>,
    pub version: String,
}

/// The deficit at one λ with every requested bound attached.
#[derive(Clone, Debug, Serialize)]
pub struct DeficitReport {
    #[serde(rename = "schemaVersion")]
    pub schema_version: u32,
    pub lambda: f64,
    #[serde(rename = "dX")]
    pub d_x: EntropyEstimate,
    #[serde(rename = "dY")]
    pub d_y: EntropyEstimate,
    #[serde(rename = "dConv")]
    pub d_conv: EntropyEstimate,
    pub deficit: f64,
    pub bounds: Vec<BoundRow>,
    pub provenance: Provenance,
}

impl DeficitReport {
    /// Combined error budget of the deficit value itself.
    pub fn deficit_budget(&self) -> f64 {
        self.lambda * self.d_x.budget()
            + (1.0 - self.lambda) * self.d_y.budget()
            + self.d_conv.budget()
    }

    /// True when every applicable bound clears the deficit within budgets
    /// (with a 1e-12 floor absorbing rounding at exactly-degenerate cases).
    pub fn all_margins_ok(&self) -> bool {
        self.bounds.iter().all(|b| match (b.applicable, b.margin) {
            (true, Some(m)) => m >= -(self.deficit_budget() + b.budget.unwrap_or(0.0) + 1e-12),
            _ => true,
        })
    }

    /// CSV rows, one per bound: scenario, lambda, deficit, bound fields.
    pub fn summary_csv_rows(&self, scenario: &str) -> String {
        let mut s = String::new();
        for b in &self.bounds {
            s.push_str(&format!(
                "{scenario},{:.17e},{:.17e},{},{},{},{}\n",
                self.lambda,
                self.deficit,
                b.name,
                b.rhs.map(|r| format!("{r:.17e}")).unwrap_or_default(),
                b.margin.map(|m| format!("{m:.17e}")).unwrap_or_default(),
                b.applicable,
            ));
        }
        s
    }
}

pub const SUMMARY_CSV_HEADER: &str = "scenario,lambda,deficit,bound,rhs,margin,applicable\n";
