//! Scenario configuration: a versioned TOML schema mapping onto measures,
//! grids and run parameters. See README for the documented format.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use stamlab::simulate::GridScheme;
use stamlab::{Error, Measure, PotentialFamily, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub measure_x: MeasureDecl,
    pub measure_y: MeasureDecl,
    pub lambdas: Vec<f64>,
    pub grid: GridDecl,
    pub run: RunDecl,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDecl {
    pub scheme: String,
    pub nodes: usize,
    pub epsilon: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDecl {
    pub n_paths: usize,
    pub master_seed: u64,
    /// Bound names to evaluate; "auto" requests every implemented bound.
    pub bounds: Vec<String>,
    #[serde(default)]
    pub checks: bool,
    /// Jointly whiten the pair so Cov(X)+Cov(Y) = 2I before everything else.
    #[serde(default)]
    pub whiten: bool,
    #[serde(default = "default_method")]
    pub method: String,
}

fn default_method() -> String {
    "bridge".into()
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureDecl {
    Gaussian {
        cov: Vec<Vec<f64>>,
    },
    Mixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covs: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        poincare: Option<f64>,
    },
    Potential {
        family: String,
        a: Vec<f64>,
        b: Vec<f64>,
        #[serde(default)]
        xi: Option<f64>,
        #[serde(default)]
        poincare: Option<f64>,
        /// Rescale to identity covariance after construction.
        #[serde(default)]
        isotropic: bool,
    },
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    if r == 0 || rows.iter().any(|row| row.len() != r) {
        return Err(Error::ConfigInvalid(format!("{what}: need a square matrix")));
    }
    Ok(DMatrix::from_fn(r, r, |i, j| rows[i][j]))
}

impl MeasureDecl {
    pub fn build(&self, what: &str) -> Result<Measure> {
        match self {
            MeasureDecl::Gaussian { cov } => Measure::gaussian(to_matrix(cov, what)?),
            MeasureDecl::Mixture {
                weights,
                means,
                covs,
                poincare,
            } => {
                if means.len() != covs.len() {
                    return Err(Error::ConfigInvalid(format!(
                        "{what}: means/covs length mismatch"
                    )));
                }
                let comps = means
                    .iter()
                    .zip(covs)
                    .map(|(m, c)| Ok((DVector::from_vec(m.clone()), to_matrix(c, what)?)))
                    .collect::<Result<Vec<_>>>()?;
                let mut m = Measure::mixture(weights.clone(), comps)?;
                if let Some(cp) = poincare {
                    m = m.with_poincare(*cp)?;
                }
                Ok(m)
            }
            MeasureDecl::Potential {
                family,
                a,
                b,
                xi,
                poincare,
                isotropic,
            } => {
                let fam = match family.as_str() {
                    "quartic" => PotentialFamily::Quartic {
                        a: a.clone(),
                        b: b.clone(),
                    },
                    other => {
                        return Err(Error::ConfigInvalid(format!(
                            "{what}: unknown potential family `{other}`"
                        )))
                    }
                };
                let mut m = Measure::potential(fam, None)?;
                if *isotropic {
                    m = m.isotropized()?;
                }
                if let Some(x) = xi {
                    m = m.with_xi(*x)?;
                }
                if let Some(cp) = poincare {
                    m = m.with_poincare(*cp)?;
                }
                Ok(m)
            }
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ScenarioConfig = toml::from_str(&text)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::ConfigInvalid(format!(
                "schema_version: expected {CONFIG_SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|&l| !(0.0 < l && l < 1.0)) {
            return Err(Error::ConfigInvalid(
                "lambdas: need a nonempty list of values in (0,1)".into(),
            ));
        }
        self.scheme()?;
        let known = stamlab::bounds::BOUND_NAMES;
        for b in &self.run.bounds {
            if b != "auto" && !known.contains(&b.as_str()) {
                return Err(Error::ConfigInvalid(format!(
                    "run.bounds: unknown bound `{b}` (known: {})",
                    known.join(", ")
                )));
            }
        }
        match self.run.method.as_str() {
            "bridge" | "euler" => Ok(()),
            other => Err(Error::ConfigInvalid(format!(
                "run.method: `{other}` (use bridge or euler)"
            ))),
        }
    }

    pub fn scheme(&self) -> Result<GridScheme> {
        match self.grid.scheme.as_str() {
            "uniform" => Ok(GridScheme::Uniform),
            "geometric" => Ok(GridScheme::Geometric),
            other => Err(Error::ConfigInvalid(format!(
                "grid.scheme: `{other}` (use uniform or geometric)"
            ))),
        }
    }

    pub fn requested_bounds(&self) -> Vec<&'static str> {
        if self.run.bounds.iter().any(|b| b == "auto") {
            stamlab::bounds::BOUND_NAMES.to_vec()
        } else {
            stamlab::bounds::BOUND_NAMES
                .iter()
                .copied()
                .filter(|n| self.run.bounds.iter().any(|b| b == n))
                .collect()
        }
    }
}
