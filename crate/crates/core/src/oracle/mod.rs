//! Brute-force references: dense-grid minimization of mutual information,
//! exhaustive search over small codes, and a scan that sets both against
//! the solver frontier.

mod exhaustive;
mod grid;
mod report;
mod scan;

pub use exhaustive::{code_search_space, exhaustive_best_code, multiset_count, DEFAULT_CODE_GUARD};
pub use grid::{grid_lipschitz, grid_min_mi, GRID_PARAMETER_GUARD, GRID_POINT_GUARD};
pub use report::{Instance, Optimizer, OracleReport};
pub use scan::{theorem_consistency_scan, ScanOptions, ScanReport, ScanRow, SCAN_COLUMNS};
