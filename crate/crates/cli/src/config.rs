//! Experiment configuration: a single TOML file with nested sections.
//! Unknown keys are rejected (typo safety); every run's output embeds the
//! full resolved config.

use rankvol::drivers::{Normalization, Scheme};
use rankvol::index::IndexSpec;
use rankvol::models::{AssetDynamics, ModelSpec};
use rankvol::term::log_spaced_grid;
use serde::{Deserialize, Serialize};

pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub model: ModelSection,
    pub index: IndexSection,
    pub sim: SimSection,
    pub maturities: MaturitySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum ModelSection {
    Gbm {
        sigma: Vec<f64>,
    },
    Fss {
        sigma0: Vec<f64>,
        hurst: Vec<f64>,
        rho: Vec<f64>,
        #[serde(default = "default_scheme")]
        scheme: Scheme,
        #[serde(default = "default_normalization")]
        normalization: Normalization,
    },
    Fbergomi {
        var0: Vec<f64>,
        eta: Vec<f64>,
        hurst: Vec<f64>,
        rho: Vec<f64>,
        #[serde(default = "default_scheme")]
        scheme: Scheme,
        #[serde(default = "default_normalization")]
        normalization: Normalization,
    },
}

fn default_scheme() -> Scheme {
    Scheme::Cholesky
}

fn default_normalization() -> Normalization {
    Normalization::UnitVariance
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSection {
    pub s0: Vec<f64>,
    pub weights: Vec<f64>,
    pub n_top: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub paths: usize,
    /// Euler step in days: dt = dt_days / 365.
    pub dt_days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaturitySection {
    /// Explicit ascending maturity list in years; overrides the log grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    /// 1-based index of the asset whose initial price varies.
    pub asset: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

/// Configuration problems carry the offending field for targeted
/// diagnostics and map to exit code 2.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn parse_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| err("<file>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model_spec().map_err(|e| err("model", e.to_string()))?;
        self.index_spec().map_err(|e| err("index", e.to_string()))?;
        if self.model_spec().unwrap().n_assets() != self.index.s0.len() {
            return Err(err(
                "index.s0",
                "one initial price per model asset is required",
            ));
        }
        if self.sim.paths == 0 {
            return Err(err("sim.paths", "path count must be at least 1"));
        }
        if !(self.sim.dt_days > 0.0) {
            return Err(err("sim.dt_days", "Euler step must be positive"));
        }
        let grid = self.maturity_grid().map_err(|e| ConfigError {
            field: "maturities".into(),
            message: e.message,
        })?;
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(err(
                "maturities.list",
                "maturity grid must be strictly ascending",
            ));
        }
        if let Some(f) = &self.family {
            if f.asset == 0 || f.asset > self.index.s0.len() {
                return Err(err(
                    "family.asset",
                    "asset index is 1-based and must name a model asset",
                ));
            }
            if f.values.len() < 3 {
                return Err(err(
                    "family.values",
                    "a family needs at least 3 configurations (one tied, two approaching)",
                ));
            }
            for v in &f.values {
                let mut s0 = self.index.s0.clone();
                s0[f.asset - 1] = *v;
                IndexSpec::new(s0, self.index.weights.clone(), self.index.n_top)
                    .map_err(|e| err("family.values", e.to_string()))?;
            }
        }
        if let Some(fit) = &self.fit {
            if let (Some(lo), Some(hi)) = (fit.t_lo, fit.t_hi) {
                if hi <= lo {
                    return Err(err("fit", "t_hi must exceed t_lo"));
                }
            }
        }
        Ok(())
    }

    pub fn model_spec(&self) -> rankvol::Result<ModelSpec> {
        match &self.model {
            ModelSection::Gbm { sigma } => ModelSpec::gbm(sigma),
            ModelSection::Fss {
                sigma0,
                hurst,
                rho,
                scheme,
                normalization,
            } => {
                if sigma0.len() != hurst.len() || sigma0.len() != rho.len() {
                    return Err(rankvol::Error::InvalidInput {
                        message: "sigma0, hurst and rho must have equal lengths".into(),
                    });
                }
                let assets = sigma0
                    .iter()
                    .zip(hurst)
                    .zip(rho)
                    .map(|((s, h), r)| AssetDynamics::FractionalSteinStein {
                        sigma0: *s,
                        h: *h,
                        rho: *r,
                    })
                    .collect();
                ModelSpec::new(assets, *normalization, *scheme)
            }
            ModelSection::Fbergomi {
                var0,
                eta,
                hurst,
                rho,
                scheme,
                normalization,
            } => {
                if var0.len() != eta.len() || var0.len() != hurst.len() || var0.len() != rho.len() {
                    return Err(rankvol::Error::InvalidInput {
                        message: "var0, eta, hurst and rho must have equal lengths".into(),
                    });
                }
                let assets = var0
                    .iter()
                    .zip(eta)
                    .zip(hurst)
                    .zip(rho)
                    .map(|(((v, e), h), r)| AssetDynamics::FractionalBergomi {
                        var0: *v,
                        eta: *e,
                        h: *h,
                        rho: *r,
                    })
                    .collect();
                ModelSpec::new(assets, *normalization, *scheme)
            }
        }
    }

    pub fn index_spec(&self) -> rankvol::Result<IndexSpec> {
        IndexSpec::new(
            self.index.s0.clone(),
            self.index.weights.clone(),
            self.index.n_top,
        )
    }

    pub fn maturity_grid(&self) -> Result<Vec<f64>, ConfigError> {
        if let Some(list) = &self.maturities.list {
            if list.is_empty() {
                return Err(err("maturities.list", "maturity list is empty"));
            }
            if list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(err(
                    "maturities.list",
                    "maturities must be positive and finite",
                ));
            }
            return Ok(list.clone());
        }
        let t_min = self.maturities.t_min.unwrap_or(1.0 / DAYS_PER_YEAR);
        let t_max = self.maturities.t_max.unwrap_or(0.25);
        let points = self.maturities.points.unwrap_or(16);
        if !(t_min > 0.0 && t_max > t_min) {
            return Err(err("maturities", "need 0 < t_min < t_max"));
        }
        if points < 2 {
            return Err(err("maturities.points", "need at least 2 grid points"));
        }
        Ok(log_spaced_grid(t_min, t_max, points))
    }

    pub fn dt_years(&self) -> f64 {
        self.sim.dt_days / DAYS_PER_YEAR
    }

    /// Euler step in days for display.
    pub fn dt_days(&self) -> f64 {
        self.sim.dt_days
    }

    /// Per-asset Hurst exponents (1/2 for Brownian assets).
    pub fn hurst_vector(&self) -> Vec<f64> {
        self.model_spec()
            .map(|m| m.assets.iter().map(|a| a.hurst()).collect())
            .unwrap_or_default()
    }

    /// Family of initial-price vectors, if configured.
    pub fn family_s0(&self) -> Option<Vec<Vec<f64>>> {
        self.family.as_ref().map(|f| {
            f.values
                .iter()
                .map(|v| {
                    let mut s0 = self.index.s0.clone();
                    s0[f.asset - 1] = *v;
                    s0
                })
                .collect()
        })
    }
}
