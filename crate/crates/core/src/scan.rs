//! Shared container for swept-parameter measurement results.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One measured (or exactly computed) quantity along the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    /// Population-type estimates, each in [0, 1].
    pub estimates: Vec<f64>,
    /// Per-point standard errors (zero in exact mode).
    pub std_errors: Vec<f64>,
}

/// Populations sampled over a strictly increasing parameter grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanResult {
    /// Name of the swept parameter (e.g. "tau_s", "phi_rad").
    pub parameter: String,
    pub grid: Vec<f64>,
    pub series: Vec<Series>,
    /// Shots per grid point; 0 means exact expectation values.
    pub shots_per_point: usize,
    /// Master seed; `None` in exact mode.
    pub seed: Option<u64>,
}

impl ScanResult {
    pub fn validate(&self) -> Result<()> {
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("scan grid must be strictly increasing".into()));
        }
        for s in &self.series {
            if s.estimates.len() != self.grid.len() || s.std_errors.len() != self.grid.len() {
                return Err(Error::Argument(format!(
                    "series '{}' length does not match the grid",
                    s.name
                )));
            }
            if s.estimates.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
                return Err(Error::Argument(format!(
                    "series '{}' has estimates outside [0, 1]",
                    s.name
                )));
            }
        }
        Ok(())
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }
}
