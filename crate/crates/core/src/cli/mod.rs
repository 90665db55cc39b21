//! Command layer behind the `coordlab` binary: spec ingestion, the
//! `region`, `simulate`, `oracle` and `check` commands, and their output
//! files.

mod commands;
mod output;
mod spec;

use std::path::PathBuf;

pub use commands::{
    cmd_check, cmd_oracle, cmd_region, cmd_simulate, RegionDocument, ScanDocument, SimCell, SimulationDocument,
    FRONTIER_COLUMNS, SIMULATION_COLUMNS,
};
pub use output::write_atomic;
pub use spec::{Alphabets, MonteCarlo, Network, OracleSettings, Outputs, ProblemSpec, RateCell, SCHEMA_VERSION};

use crate::error::CoordError;

/// Process exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitStatus {
    Ok = 0,
    /// I/O or internal failure.
    Internal = 1,
    /// Malformed spec or command line.
    Usage = 2,
    /// Some solve stopped above the gap tolerance.
    NonConvergence = 3,
    /// An enumeration guard or table cap was hit.
    Guard = 4,
    InvariantFailure = 5,
    /// A budget ran out and the output is partial.
    Partial = 6,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn for_error(e: &CoordError) -> Self {
        match e {
            CoordError::Io(_) | CoordError::Csv(_) | CoordError::Json(_) => ExitStatus::Internal,
            CoordError::GuardExceeded { .. } | CoordError::TableCap { .. } | CoordError::IndexOverflow(_) => {
                ExitStatus::Guard
            }
            _ => ExitStatus::Usage,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Directory for relative output names.
    pub out: PathBuf,
    /// Overrides `monte_carlo.seed`.
    pub seed: Option<u64>,
}

/// What a command did.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandReport {
    pub status: ExitStatus,
    pub written: Vec<PathBuf>,
    /// Lines for standard output.
    pub lines: Vec<String>,
}
