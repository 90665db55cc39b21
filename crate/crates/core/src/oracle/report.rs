use serde::{Deserialize, Serialize};

use crate::code::CoordinationCode;
use crate::prob::{CondPmf, JointPmf, Pmf};

/// The problem an oracle was run on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "oracle", rename_all = "snake_case")]
pub enum Instance {
    Grid {
        p0: Pmf,
        target: CondPmf,
        delta: f64,
        grid_step: f64,
    },
    Exhaustive {
        p0: Pmf,
        target: JointPmf,
        n: usize,
        #[serde(rename = "R1")]
        r1: f64,
        #[serde(rename = "R2")]
        r2: Option<f64>,
        guard: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Conditional(CondPmf),
    Code(CoordinationCode),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub instance: Instance,
    /// Minimal mutual information (bits) or minimal expected TV.
    pub optimum: f64,
    pub optimizer: Optimizer,
    /// Grid points or candidate codes in the enumerated space.
    pub search_space_size: u64,
    /// Candidates whose objective was evaluated: feasible grid points, or
    /// every code.
    pub evaluated: u64,
    pub discretization_bound: Option<f64>,
    pub wall_time_s: f64,
}
