use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{csv_bytes, json_bytes, opt, resolve, write_atomic};
use super::spec::{Network, ProblemSpec, RateCell, SCHEMA_VERSION};
use super::{CommandReport, ExitStatus, RunOptions};
use crate::check::{instance_battery, run_battery, CheckOutcome};
use crate::code::{
    build_codebook_code, expected_tv_exact, expected_tv_monte_carlo, CoordinationCode, Quantile, ENUMERATION_GUARD,
};
use crate::error::{CoordError, Result};
use crate::oracle::{theorem_consistency_scan, ScanOptions, ScanReport};
use crate::prob::{compose, CondPmf, Pmf};
use crate::region::{delta_star, solve_cascade, solve_two_node, Frontier};

pub const FRONTIER_COLUMNS: [&str; 7] = ["delta", "lambda", "R1", "R2", "gap", "converged", "provenance"];

pub const SIMULATION_COLUMNS: [&str; 20] = [
    "n",
    "R1",
    "R2",
    "delta",
    "margin",
    "messages1",
    "messages2",
    "samples",
    "mean_tv",
    "se",
    "q0",
    "q05",
    "q25",
    "q50",
    "q75",
    "q95",
    "q100",
    "exact_tv",
    "code_seed",
    "error",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDocument {
    pub schema_version: u32,
    pub network: Network,
    pub source: Pmf,
    pub target: CondPmf,
    pub delta_star: f64,
    pub frontiers: Vec<Frontier>,
}

/// One simulated `(n, rates)` cell. `error` is set, and the statistics
/// absent, when the code could not be built within the table cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimCell {
    pub n: usize,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    pub delta: Option<f64>,
    pub margin: Option<f64>,
    pub messages: Option<(usize, Option<usize>)>,
    pub samples: usize,
    pub mean_tv: Option<f64>,
    pub standard_error: Option<f64>,
    pub quantiles: Vec<Quantile>,
    pub exact_tv: Option<f64>,
    pub code_seed: u64,
    pub mc_seed: u64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationDocument {
    pub schema_version: u32,
    pub network: Network,
    pub source: Pmf,
    pub target: CondPmf,
    pub cells: Vec<SimCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanDocument {
    pub schema_version: u32,
    pub source: Pmf,
    pub target: CondPmf,
    pub scan: ScanReport,
}

fn emit(opts: &RunOptions, name: &str, bytes: &[u8], report: &mut CommandReport) -> Result<()> {
    let path = resolve(&opts.out, name);
    write_atomic(&path, bytes)?;
    report.lines.push(format!("wrote {}", path.display()));
    report.written.push(path);
    Ok(())
}

fn raise(report: &mut CommandReport, status: ExitStatus) {
    report.status = report.status.max(status);
}

fn empty_report() -> CommandReport {
    CommandReport { status: ExitStatus::Ok, written: Vec::new(), lines: Vec::new() }
}

/// Solves the region at every `delta_grid` value and writes the frontier
/// CSV and JSON.
pub fn cmd_region(spec: &ProblemSpec, opts: &RunOptions) -> Result<CommandReport> {
    spec.require_region()?;
    let clock = Instant::now();
    let (p0, target) = (spec.p0(), spec.conditional());
    let frontiers: Vec<Frontier> = spec
        .delta_grid
        .par_iter()
        .map(|&delta| match spec.network {
            Network::TwoNode => {
                Ok(Frontier { delta, points: vec![solve_two_node(&p0, &target, delta, &spec.solver)?] })
            }
            Network::Cascade => solve_cascade(&p0, &target, delta, &spec.solver),
        })
        .collect::<Result<_>>()?;
    let star = delta_star(&p0, &target)?;

    let mut report = empty_report();
    let mut rows = Vec::new();
    for point in frontiers.iter().flat_map(|f| &f.points) {
        if !point.converged {
            raise(&mut report, ExitStatus::NonConvergence);
        }
        rows.push(vec![
            point.delta.to_string(),
            opt(point.lambda),
            point.r1.to_string(),
            opt(point.r2),
            point.certificate.to_string(),
            point.converged.to_string(),
            point.provenance.as_str().to_string(),
        ]);
    }
    let header = vec![format!("region frontier; network {}; delta* {star}", network_name(spec.network))];
    emit(opts, &spec.outputs.frontier_csv, &csv_bytes(&header, &FRONTIER_COLUMNS, &rows)?, &mut report)?;
    let doc = RegionDocument {
        schema_version: SCHEMA_VERSION,
        network: spec.network,
        source: p0,
        target,
        delta_star: star,
        frontiers,
    };
    emit(opts, &spec.outputs.frontier_json, &json_bytes(&doc)?, &mut report)?;
    if report.status == ExitStatus::NonConvergence {
        report.lines.push("some frontier points stopped above the gap tolerance".into());
    }
    info!("region: {} points in {:.3} s", rows.len(), clock.elapsed().as_secs_f64());
    Ok(report)
}

fn network_name(network: Network) -> &'static str {
    match network {
        Network::TwoNode => "two_node",
        Network::Cascade => "cascade",
    }
}

/// Rates and the conditional that codebooks are drawn from.
fn resolve_cell(
    spec: &ProblemSpec,
    cell: &RateCell,
    p0: &Pmf,
    target: &CondPmf,
) -> Result<(f64, Option<f64>, CondPmf)> {
    match (cell.delta, cell.margin) {
        (Some(delta), Some(margin)) => {
            let point = solve_two_node(p0, target, delta, &spec.solver)?;
            Ok((point.r1 + margin, None, point.argmin))
        }
        _ => Ok((cell.r1.unwrap_or(0.0), cell.r2, target.clone())),
    }
}

fn simulate_cell(
    code: Result<CoordinationCode>,
    p0: &Pmf,
    joint: &crate::prob::JointPmf,
    n: usize,
    samples: usize,
    mut cell: SimCell,
) -> Result<SimCell> {
    let code = match code {
        Ok(code) => code,
        Err(e @ CoordError::TableCap { .. }) => {
            cell.error = Some(e.to_string());
            return Ok(cell);
        }
        Err(e) => return Err(e),
    };
    let sim = expected_tv_monte_carlo(&code, p0, joint, samples, cell.mc_seed)?;
    let exact = (p0.alphabet_size() as f64).powi(n as i32) <= ENUMERATION_GUARD as f64;
    cell.exact_tv = if exact { Some(expected_tv_exact(&code, p0, joint)?) } else { None };
    cell.messages = Some(code.message_counts());
    cell.mean_tv = Some(sim.mean_tv);
    cell.standard_error = Some(sim.standard_error);
    cell.quantiles = sim.quantiles;
    Ok(cell)
}

/// Builds one random code per `(n, rate cell)` and estimates its expected
/// TV distance to the target.
///
/// Cells run in `n`-major order; cell `i` draws its codebook with seed
/// `seed + 2i` and its source samples with seed `seed + 2i + 1`.
pub fn cmd_simulate(spec: &ProblemSpec, opts: &RunOptions) -> Result<CommandReport> {
    spec.require_simulate()?;
    let clock = Instant::now();
    let seed = spec.seed(opts.seed)?;
    let samples = spec.monte_carlo.as_ref().map_or(0, |m| m.samples);
    let (p0, target) = (spec.p0(), spec.conditional());
    let joint = compose(&p0, &target)?;
    let resolved: Vec<_> =
        spec.rates.iter().map(|cell| resolve_cell(spec, cell, &p0, &target)).collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize, usize)> = spec
        .n_grid
        .iter()
        .flat_map(|&n| (0..spec.rates.len()).map(move |j| (n, j)))
        .enumerate()
        .map(|(i, (n, j))| (i, n, j))
        .collect();
    let cells: Vec<SimCell> = jobs
        .par_iter()
        .map(|&(i, n, j)| {
            let (r1, r2, ref from) = resolved[j];
            let code_seed = seed.wrapping_add(2 * i as u64);
            let cell = SimCell {
                n,
                r1,
                r2,
                delta: spec.rates[j].delta,
                margin: spec.rates[j].margin,
                messages: None,
                samples,
                mean_tv: None,
                standard_error: None,
                quantiles: Vec::new(),
                exact_tv: None,
                code_seed,
                mc_seed: code_seed.wrapping_add(1),
                error: None,
            };
            simulate_cell(build_codebook_code(&p0, from, n, r1, r2, code_seed), &p0, &joint, n, samples, cell)
        })
        .collect::<Result<_>>()?;

    let mut report = empty_report();
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            if c.error.is_some() {
                raise(&mut report, ExitStatus::Guard);
            }
            let mut row = vec![
                c.n.to_string(),
                c.r1.to_string(),
                opt(c.r2),
                opt(c.delta),
                opt(c.margin),
                opt(c.messages.map(|m| m.0)),
                opt(c.messages.and_then(|m| m.1)),
                c.samples.to_string(),
                opt(c.mean_tv),
                opt(c.standard_error),
            ];
            if c.quantiles.is_empty() {
                row.extend(std::iter::repeat_n(String::new(), 7));
            } else {
                row.extend(c.quantiles.iter().map(|q| q.value.to_string()));
            }
            row.extend([opt(c.exact_tv), c.code_seed.to_string(), opt(c.error.clone())]);
            row
        })
        .collect();
    let header = vec![format!("code simulation; network {}; seed {seed}", network_name(spec.network))];
    emit(opts, &spec.outputs.simulation_csv, &csv_bytes(&header, &SIMULATION_COLUMNS, &rows)?, &mut report)?;
    let doc = SimulationDocument { schema_version: SCHEMA_VERSION, network: spec.network, source: p0, target, cells };
    emit(opts, &spec.outputs.simulation_json, &json_bytes(&doc)?, &mut report)?;
    if report.status == ExitStatus::Guard {
        report.lines.push("some cells exceeded the codebook table cap".into());
    }
    info!("simulate: {} cells in {:.3} s", rows.len(), clock.elapsed().as_secs_f64());
    Ok(report)
}

/// Runs the consistency scan of code searches against the two-node
/// frontier and writes its CSV and JSON.
pub fn cmd_oracle(spec: &ProblemSpec, opts: &RunOptions) -> Result<CommandReport> {
    spec.require_oracle()?;
    let clock = Instant::now();
    let (p0, target) = (spec.p0(), spec.conditional());
    let options = ScanOptions {
        rate_margin: spec.oracle.rate_margin,
        samples: spec.monte_carlo.as_ref().map_or(ScanOptions::default().samples, |m| m.samples),
        seed: spec.seed(opts.seed)?,
        code_guard: spec.oracle.code_guard,
        solver: spec.solver.clone(),
    };
    let scan = theorem_consistency_scan(&p0, &target, &spec.n_grid, &spec.delta_grid, spec.oracle.budget, &options)?;

    let mut report = empty_report();
    let mut csv = Vec::new();
    scan.write_csv(&mut csv)?;
    emit(opts, &spec.outputs.scan_csv, &csv, &mut report)?;
    if scan.flags > 0 {
        raise(&mut report, ExitStatus::InvariantFailure);
        report.lines.push(format!("{} rows flagged", scan.flags));
    } else if scan.partial {
        raise(&mut report, ExitStatus::Partial);
        report.lines.push(format!("budget of {} codes ran out; the scan is partial", scan.budget));
    }
    let doc = ScanDocument { schema_version: SCHEMA_VERSION, source: p0, target, scan };
    emit(opts, &spec.outputs.scan_json, &json_bytes(&doc)?, &mut report)?;
    info!("oracle: {} codes in {:.3} s", doc.scan.codes_evaluated, clock.elapsed().as_secs_f64());
    Ok(report)
}

fn outcome_line(o: &CheckOutcome) -> String {
    match &o.violation {
        None => format!("ok    {} ({} cases)", o.property, o.cases),
        Some(v) => format!("FAIL  {} ({} cases): {v}", o.property, o.cases),
    }
}

/// The randomized property battery, plus the instance checks of `spec`
/// when one is given.
pub fn cmd_check(spec: Option<&ProblemSpec>, seed: u64) -> Result<CommandReport> {
    let mut outcomes = run_battery(seed)?;
    if let Some(spec) = spec {
        outcomes.extend(instance_battery(&spec.p0(), &spec.conditional(), &spec.solver)?);
    }
    let mut report = empty_report();
    report.lines = outcomes.iter().map(outcome_line).collect();
    if outcomes.iter().any(|o| !o.passed()) {
        report.status = ExitStatus::InvariantFailure;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(extra: &str) -> ProblemSpec {
        ProblemSpec::from_json(&format!(
            r#"{{
                "schema_version": 1,
                "network": "two_node",
                "alphabets": {{"x": 2, "y": 2}},
                "source": [0.5, 0.5],
                "target": [[0.9, 0.1], [0.1, 0.9]],
                "delta_grid": [0.0, 0.1, 0.4]
                {extra}
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn region_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { out: dir.path().into(), seed: None };
        let report = cmd_region(&spec(""), &opts).unwrap();
        assert_eq!(report.status, ExitStatus::Ok);
        let csv = std::fs::read_to_string(dir.path().join("frontier.csv")).unwrap();
        assert_eq!(csv.lines().count(), 5);
        let doc: RegionDocument =
            serde_json::from_slice(&std::fs::read(dir.path().join("frontier.json")).unwrap()).unwrap();
        assert_eq!(doc.frontiers.len(), 3);
        assert!((doc.delta_star - 0.4).abs() < 1e-12);
    }

    #[test]
    fn simulate_cells_and_seeds() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(
            r#", "n_grid": [2, 3], "rates": [{"R1": 0.5}, {"delta": 0.1, "margin": 0.2}],
               "monte_carlo": {"samples": 100, "seed": 10}"#,
        );
        let opts = RunOptions { out: dir.path().into(), seed: None };
        assert_eq!(cmd_simulate(&s, &opts).unwrap().status, ExitStatus::Ok);
        let doc: SimulationDocument =
            serde_json::from_slice(&std::fs::read(dir.path().join("simulation.json")).unwrap()).unwrap();
        let seeds: Vec<u64> = doc.cells.iter().map(|c| c.code_seed).collect();
        assert_eq!(seeds, vec![10, 12, 14, 16]);
        assert!(doc.cells.iter().all(|c| c.exact_tv.is_some() && c.mean_tv.is_some()));
        assert_eq!(doc.cells[2].n, 3);
    }

    #[test]
    fn table_cap_cells_are_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(r#", "n_grid": [40], "rates": [{"R1": 0.9}], "monte_carlo": {"samples": 10, "seed": 1}"#);
        let report = cmd_simulate(&s, &RunOptions { out: dir.path().into(), seed: None }).unwrap();
        assert_eq!(report.status, ExitStatus::Guard);
        let doc: SimulationDocument =
            serde_json::from_slice(&std::fs::read(dir.path().join("simulation.json")).unwrap()).unwrap();
        assert!(doc.cells[0].error.is_some());
    }

    #[test]
    fn simulate_needs_a_seed() {
        let s = spec(r#", "n_grid": [2], "rates": [{"R1": 0.5}], "monte_carlo": {"samples": 10}"#);
        let err = cmd_simulate(&s, &RunOptions::default()).unwrap_err();
        assert_eq!(ExitStatus::for_error(&err), ExitStatus::Usage);
    }

    #[test]
    fn oracle_is_two_node_and_exits_partial_on_budget() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(r#", "n_grid": [1, 2], "oracle": {"budget": 3}, "monte_carlo": {"samples": 50}"#);
        let report = cmd_oracle(&s, &RunOptions { out: dir.path().into(), seed: Some(0) }).unwrap();
        assert_eq!(report.status, ExitStatus::Partial);
        assert_eq!(report.written.len(), 2);
    }
}
