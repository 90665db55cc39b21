use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};

/// Tolerances and sweeps for the region solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Target for the certified primal-minus-lower-bound gap, in bits.
    pub duality_gap_tol: f64,
    pub max_iterations: usize,
    /// Largest TV excess over `delta` accepted for a returned argmin.
    pub projection_tol: f64,
    pub delta_grid: Vec<f64>,
    /// Weights `lambda` on `I(X; Y,Z)` in the cascade sweep.
    pub scalarization_weights: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            duality_gap_tol: 1e-7,
            max_iterations: 50_000,
            projection_tol: 1e-10,
            delta_grid: vec![0.0],
            scalarization_weights: (0..=32).map(|i| i as f64 / 32.0).collect(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.duality_gap_tol, self.projection_tol].iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(CoordError::InvalidArgument("solver tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(CoordError::InvalidArgument("max_iterations must be positive".into()));
        }
        if self.delta_grid.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(CoordError::InvalidArgument("delta_grid values must lie in [0, 1]".into()));
        }
        if self.delta_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(CoordError::InvalidArgument("delta_grid must be sorted ascending".into()));
        }
        if self.scalarization_weights.is_empty() || self.scalarization_weights.iter().any(|l| !(0.0..=1.0).contains(l))
        {
            return Err(CoordError::InvalidArgument("scalarization weights must lie in [0, 1]".into()));
        }
        Ok(())
    }
}
