//! Simulation time grids.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Ascending grid of times in years, starting at 0. Spacing need not be
/// uniform, though the hybrid driver scheme requires it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.is_empty() || t[0] != 0.0 {
            return Err(invalid("time grid must start at 0"));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(invalid("time grid contains non-finite entries"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("time grid must be strictly increasing"));
        }
        Ok(Self { t })
    }

    /// Uniform grid reaching `horizon` in steps of approximately `dt`.
    /// The step count is rounded so the final node lands exactly on the
    /// horizon.
    pub fn uniform(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        let steps = ((horizon / dt).round() as usize).max(1);
        let t = (0..=steps)
            .map(|i| horizon * i as f64 / steps as f64)
            .collect();
        Self::new(t)
    }

    /// Node times including t=0.
    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    /// Number of steps (nodes minus one).
    pub fn steps(&self) -> usize {
        self.t.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// Step sizes t[i+1] - t[i].
    pub fn deltas(&self) -> Vec<f64> {
        self.t.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Whether the spacing is uniform to relative tolerance 1e-9.
    pub fn is_uniform(&self) -> bool {
        let d = self.deltas();
        let d0 = d[0];
        d.iter().all(|x| (x - d0).abs() <= 1e-9 * d0)
    }
}
