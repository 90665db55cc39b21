use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};
use crate::oracle::DEFAULT_CODE_GUARD;
use crate::prob::{CondPmf, Pmf};
use crate::region::SolverConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Network {
    TwoNode,
    Cascade,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alphabets {
    pub x: usize,
    pub y: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<usize>,
}

/// One simulated rate cell: either explicit rates, or a margin above the
/// two-node frontier at `delta`. With `delta` set, codebooks are drawn
/// from the solver's argmin at `delta` instead of the target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCell {
    #[serde(rename = "R1", default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(rename = "R2", default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarlo {
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSettings {
    /// Total codes the scan may search.
    pub budget: u64,
    pub code_guard: u64,
    /// Bits above the frontier for the scan's simulated codes.
    pub rate_margin: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { budget: 100_000_000, code_guard: DEFAULT_CODE_GUARD, rate_margin: 0.25 }
    }
}

/// Output file names, relative to `--out` unless absolute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub frontier_csv: String,
    pub frontier_json: String,
    pub simulation_csv: String,
    pub simulation_json: String,
    pub scan_csv: String,
    pub scan_json: String,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            frontier_csv: "frontier.csv".into(),
            frontier_json: "frontier.json".into(),
            simulation_csv: "simulation.csv".into(),
            simulation_json: "simulation.json".into(),
            scan_csv: "scan.csv".into(),
            scan_json: "scan.json".into(),
        }
    }
}

/// Problem description read by every command.
///
/// `target` holds one row per source symbol: `p(y|x)` for a two-node
/// network, `p(y,z|x)` with `z` varying fastest for a cascade. The
/// solver's own `delta_grid` is replaced by the top-level one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub schema_version: u32,
    pub network: Network,
    pub alphabets: Alphabets,
    pub source: Vec<f64>,
    pub target: Vec<Vec<f64>>,
    #[serde(default)]
    pub delta_grid: Vec<f64>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub rates: Vec<RateCell>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub monte_carlo: Option<MonteCarlo>,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default)]
    pub outputs: Outputs,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> CoordError {
    CoordError::Schema { field: field.into(), message: message.into() }
}

fn strictly_increasing<T: PartialOrd>(field: &str, grid: &[T]) -> Result<()> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(schema(field, "must be strictly increasing"));
    }
    Ok(())
}

fn require<T>(field: &str, grid: &[T], command: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(schema(field, format!("must be non-empty for `{command}`")));
    }
    Ok(())
}

impl ProblemSpec {
    /// Parses and validates; JSON errors report line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut spec: ProblemSpec = serde_json::from_str(text)
            .map_err(|e| schema(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
        spec.solver.delta_grid = spec.delta_grid.clone();
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoordError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema("schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        let a = &self.alphabets;
        if a.x == 0 || a.y == 0 || a.z == Some(0) {
            return Err(schema("alphabets", "alphabet sizes must be positive"));
        }
        if [a.x, a.y, a.z.unwrap_or(1)].iter().any(|&s| s > 256) {
            return Err(schema("alphabets", "alphabet sizes are limited to 256 symbols"));
        }
        match (self.network, a.z) {
            (Network::TwoNode, Some(_)) => return Err(schema("alphabets.z", "a two_node network has no Z alphabet")),
            (Network::Cascade, None) => return Err(schema("alphabets.z", "a cascade network needs a Z alphabet")),
            _ => {}
        }
        if self.source.len() != a.x {
            return Err(schema("source", format!("expected {} entries, found {}", a.x, self.source.len())));
        }
        Pmf::new(self.source.clone()).map_err(|e| schema("source", e.to_string()))?;
        if self.target.len() != a.x {
            return Err(schema("target", format!("expected {} rows, found {}", a.x, self.target.len())));
        }
        let width = a.y * a.z.unwrap_or(1);
        for (i, row) in self.target.iter().enumerate() {
            if row.len() != width {
                return Err(schema(format!("target[{i}]"), format!("expected {width} entries, found {}", row.len())));
            }
            Pmf::new(row.clone()).map_err(|e| schema(format!("target[{i}]"), e.to_string()))?;
        }
        if let Some(d) = self.delta_grid.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(schema("delta_grid", format!("{d} lies outside [0, 1]")));
        }
        strictly_increasing("delta_grid", &self.delta_grid)?;
        if self.n_grid.contains(&0) {
            return Err(schema("n_grid", "blocklengths must be at least 1"));
        }
        strictly_increasing("n_grid", &self.n_grid)?;
        for (i, cell) in self.rates.iter().enumerate() {
            self.validate_rate(cell).map_err(|m| schema(format!("rates[{i}]"), m))?;
        }
        if let Some(mc) = &self.monte_carlo {
            if mc.samples == 0 {
                return Err(schema("monte_carlo.samples", "must be at least 1"));
            }
        }
        self.solver.validate().map_err(|e| schema("solver", e.to_string()))?;
        Ok(())
    }

    fn validate_rate(&self, cell: &RateCell) -> std::result::Result<(), String> {
        let nonneg = |r: Option<f64>| r.is_none_or(|r| r >= 0.0 && r.is_finite());
        if !nonneg(cell.r1) || !nonneg(cell.r2) || !nonneg(cell.margin) {
            return Err("rates and margins must be finite and non-negative".into());
        }
        if cell.delta.is_some_and(|d| !(0.0..=1.0).contains(&d)) {
            return Err("delta must lie in [0, 1]".into());
        }
        match self.network {
            Network::TwoNode => {
                if cell.r2.is_some() {
                    return Err("R2 is only meaningful for a cascade".into());
                }
                match (cell.r1, cell.margin, cell.delta) {
                    (Some(_), None, _) => Ok(()),
                    (None, Some(_), Some(_)) => Ok(()),
                    _ => Err("give either R1, or margin together with delta".into()),
                }
            }
            Network::Cascade => match (cell.r1, cell.r2, cell.margin, cell.delta) {
                (Some(_), Some(_), None, None) => Ok(()),
                _ => Err("a cascade cell needs R1 and R2 and takes neither margin nor delta".into()),
            },
        }
    }

    pub fn p0(&self) -> Pmf {
        Pmf::new(self.source.clone()).expect("validated source")
    }

    pub fn conditional(&self) -> CondPmf {
        let shape = match self.alphabets.z {
            Some(z) => vec![self.alphabets.y, z],
            None => vec![self.alphabets.y],
        };
        CondPmf::from_rows(self.target.clone(), shape).expect("validated target")
    }

    pub(crate) fn require_region(&self) -> Result<()> {
        require("delta_grid", &self.delta_grid, "region")
    }

    pub(crate) fn require_simulate(&self) -> Result<()> {
        require("n_grid", &self.n_grid, "simulate")?;
        require("rates", &self.rates, "simulate")?;
        if self.monte_carlo.is_none() {
            return Err(schema("monte_carlo", "required for `simulate`"));
        }
        Ok(())
    }

    pub(crate) fn require_oracle(&self) -> Result<()> {
        require("n_grid", &self.n_grid, "oracle")?;
        require("delta_grid", &self.delta_grid, "oracle")?;
        if self.network != Network::TwoNode {
            return Err(schema("network", "`oracle` runs on two_node networks"));
        }
        Ok(())
    }

    /// Seed from `--seed`, else from `monte_carlo.seed`.
    pub(crate) fn seed(&self, flag: Option<u64>) -> Result<u64> {
        flag.or(self.monte_carlo.as_ref().and_then(|m| m.seed))
            .ok_or_else(|| schema("monte_carlo.seed", "a seed is required (or pass --seed)"))
    }
}
