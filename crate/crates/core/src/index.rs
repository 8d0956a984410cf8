//! Ranked-index construction and Monte Carlo futures pricing.
//!
//! The index aggregates the top `n_top` order statistics of the asset
//! prices, `I_t = sum_{j<=n_top} w_j S^(j)_t`. The index itself is not
//! tradable; the quantity priced everywhere downstream is the index future
//! `F_{0,T} = E[I_T]`.

use crate::error::{invalid, Result};
use crate::models::{euler_simulate, ModelSpec, PathBatch, SimConfig};
use serde::{Deserialize, Serialize};

/// Initial prices, rank weights and the number of top ranks aggregated.
///
/// Initial prices must be sorted non-increasing with at most one adjacent
/// tie; weights for the aggregated ranks must be positive. Extra weight
/// entries beyond `n_top` are accepted (figure configurations write e.g.
/// `w = (1, 0)` with one aggregated rank) but never used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSpec {
    pub s0: Vec<f64>,
    pub w: Vec<f64>,
    pub n_top: usize,
}

impl IndexSpec {
    pub fn new(s0: Vec<f64>, w: Vec<f64>, n_top: usize) -> Result<Self> {
        if s0.is_empty() {
            return Err(invalid("s0 must be non-empty"));
        }
        if s0.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("initial prices must be positive and finite"));
        }
        if s0.windows(2).any(|p| p[1] > p[0]) {
            return Err(invalid("initial prices must be sorted non-increasing"));
        }
        let ties: Vec<usize> = (0..s0.len().saturating_sub(1))
            .filter(|&i| s0[i] == s0[i + 1])
            .collect();
        if ties.len() > 1 {
            return Err(invalid("at most one adjacent tie is allowed in s0"));
        }
        if n_top == 0 || n_top > s0.len() {
            return Err(invalid(format!(
                "n_top must lie in 1..={} (number of assets), got {n_top}",
                s0.len()
            )));
        }
        if w.len() < n_top {
            return Err(invalid(format!(
                "need at least {n_top} weights for {n_top} aggregated ranks, got {}",
                w.len()
            )));
        }
        if w[..n_top].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("weights for aggregated ranks must be positive"));
        }
        Ok(Self { s0, w, n_top })
    }

    pub fn n_assets(&self) -> usize {
        self.s0.len()
    }

    /// Index of the first member of the adjacent tie, if any.
    pub fn tie_position(&self) -> Option<usize> {
        (0..self.s0.len() - 1).find(|&i| self.s0[i] == self.s0[i + 1])
    }

    /// Index value at time 0.
    pub fn initial_index(&self) -> f64 {
        index_value(&self.s0, self).expect("s0 is validated")
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

impl McEstimate {
    pub fn from_samples(samples: impl Iterator<Item = f64>) -> Self {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for x in samples {
            n += 1;
            sum += x;
            sum_sq += x * x;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            (sum_sq - nf * mean * mean).max(0.0) / (nf - 1.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            stderr: (var / nf).sqrt(),
            n_paths: n,
        }
    }
}

/// Non-increasing rearrangement of the input. Ties keep the original asset
/// order (stable sort); ties have probability zero under the continuous
/// models, so this only pins down degenerate cases deterministically.
pub fn rank_prices(prices: &[f64]) -> Vec<f64> {
    let mut out = prices.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// I = sum_{j <= n_top} w_j * ranked(prices)[j].
pub fn index_value(prices: &[f64], spec: &IndexSpec) -> Result<f64> {
    if prices.len() != spec.n_assets() {
        return Err(invalid(format!(
            "price vector has {} entries, index spec has {}",
            prices.len(),
            spec.n_assets()
        )));
    }
    let ranked = rank_prices(prices);
    Ok(ranked[..spec.n_top]
        .iter()
        .zip(&spec.w)
        .map(|(s, w)| s * w)
        .sum())
}

/// Index values per path of a simulated batch.
pub fn index_samples(batch: &PathBatch, spec: &IndexSpec) -> Result<Vec<f64>> {
    if batch.model.n_assets() != spec.n_assets() {
        return Err(invalid("batch and index spec disagree on asset count"));
    }
    let mut out = Vec::with_capacity(batch.n_paths());
    for p in 0..batch.n_paths() {
        out.push(index_value(batch.terminal_prices(p), spec)?);
    }
    Ok(out)
}

/// Futures price estimate from an existing batch (fixed-order summation,
/// bit-reproducible).
pub fn futures_from_batch(batch: &PathBatch, spec: &IndexSpec) -> Result<McEstimate> {
    Ok(McEstimate::from_samples(
        index_samples(batch, spec)?.into_iter(),
    ))
}

/// F_{0,T} = E[I_T] by Monte Carlo.
pub fn futures_price(
    model: &ModelSpec,
    spec: &IndexSpec,
    maturity: f64,
    cfg: &SimConfig,
) -> Result<McEstimate> {
    if maturity <= 0.0 {
        return Err(invalid("maturity must be positive"));
    }
    if (cfg.grid.horizon() - maturity).abs() > 1e-12 * maturity.max(1.0) {
        return Err(crate::error::Error::GridMismatch {
            message: format!(
                "config grid ends at {} but maturity is {maturity}",
                cfg.grid.horizon()
            ),
        });
    }
    let batch = euler_simulate(model, &spec.s0, cfg)?;
    futures_from_batch(&batch, spec)
}
