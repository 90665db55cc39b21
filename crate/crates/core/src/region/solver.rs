//! Certified minimization of mutual information over the fidelity polytope.
//!
//! A Newton barrier method drives the iterates; every centered point also
//! yields a Frank-Wolfe linearization lower bound, and the run stops once
//! the best primal value is within `duality_gap_tol` of the best lower
//! bound.

use serde::{Deserialize, Serialize};

use super::barrier::Barrier;
use super::config::SolverConfig;
use super::program::{Group, Program};
use crate::error::{CoordError, Result};
use crate::prob::{compose, mutual_information, CondPmf, Pmf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "solver")]
    Solver,
    #[serde(rename = "grid-oracle")]
    GridOracle,
    #[serde(rename = "code-simulation")]
    CodeSimulation,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Solver => "solver",
            Provenance::GridOracle => "grid-oracle",
            Provenance::CodeSimulation => "code-simulation",
        }
    }
}

/// A rate tuple at fidelity `delta`, with the conditional that attains it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub r1: f64,
    pub r2: Option<f64>,
    pub delta: f64,
    pub lambda: Option<f64>,
    pub argmin: CondPmf,
    /// Primal value minus the best certified lower bound (bits).
    pub certificate: f64,
    pub converged: bool,
    pub iterations: usize,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub delta: f64,
    pub points: Vec<RegionPoint>,
}

impl Frontier {
    pub fn max_certificate(&self) -> f64 {
        self.points.iter().map(|p| p.certificate).fold(0.0, f64::max)
    }
}

pub(crate) fn check_inputs(p0: &Pmf, target: &CondPmf) -> Result<()> {
    if p0.alphabet_size() != target.input_size() {
        return Err(CoordError::ShapeMismatch { left: vec![p0.alphabet_size()], right: vec![target.input_size()] });
    }
    Ok(())
}

fn clamp_delta(delta: f64) -> Result<f64> {
    if delta.is_nan() || delta < 0.0 {
        return Err(CoordError::NegativeDelta(delta));
    }
    if delta > 1.0 {
        log::warn!("delta {delta} exceeds 1; clamped");
        return Ok(1.0);
    }
    Ok(delta)
}

/// Barrier gap, relative to the target gap, past which centering stops
/// even without a certificate.
const BARRIER_FLOOR: f64 = 1e-3;

pub(crate) struct Outcome {
    pub q: Vec<f64>,
    pub value: f64,
    pub certificate: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Barrier centerings on `program`, starting from the target, until the
/// best centered value is within `duality_gap_tol` of the best
/// linearization bound or the Newton step budget runs out.
pub(crate) fn minimize(program: &Program, config: &SolverConfig) -> Outcome {
    let tol = config.duality_gap_tol;
    let start = program.target.clone();
    let mut best = (program.value(&start), start.clone());
    // every objective is a nonnegative combination of mutual informations
    let mut lower = program.lower_bound(&start).max(0.0);
    let iterations = Barrier::new(program).run(config.max_iterations, BARRIER_FLOOR * tol, |q| {
        let value = program.value(q);
        if value < best.0 {
            best = (value, q.to_vec());
        }
        lower = lower.max(program.lower_bound(q));
        best.0 - lower <= tol
    });
    // Newton steps keep the row sums only up to rounding
    let q = program.normalized(&best.1);
    let best = (program.value(&q), q);
    let certificate = (best.0 - lower).max(0.0);
    let feasible = program.weighted_l1(&best.1) <= program.budget + 2.0 * config.projection_tol;
    Outcome { q: best.1, value: best.0, certificate, iterations, converged: certificate <= tol && feasible }
}

fn finish_conditional(target: &CondPmf, q: Vec<f64>) -> CondPmf {
    CondPmf::from_parts_unchecked(target.input_size(), target.output_shape().to_vec(), q)
}

/// Minimum of `I(X; Y^)` over conditionals within `delta` of the target.
pub fn solve_two_node(p0: &Pmf, target: &CondPmf, delta: f64, config: &SolverConfig) -> Result<RegionPoint> {
    check_inputs(p0, target)?;
    config.validate()?;
    let delta = clamp_delta(delta)?;
    let no = target.output_len();
    let program = Program::new(p0.mass(), target, delta, vec![Program::identity_group(no, 1.0)]);
    let out = minimize(&program, config);
    if !out.converged {
        log::warn!(
            "two-node solve at delta {delta} stopped after {} iterations with gap {:e}",
            out.iterations,
            out.certificate
        );
    }
    Ok(RegionPoint {
        r1: out.value,
        r2: None,
        delta,
        lambda: None,
        argmin: finish_conditional(target, out.q),
        certificate: out.certificate,
        converged: out.converged,
        iterations: out.iterations,
        provenance: Provenance::Solver,
    })
}

fn cascade_shape(target: &CondPmf) -> Result<(usize, usize)> {
    match target.output_shape() {
        [ny, nz] => Ok((*ny, *nz)),
        other => Err(CoordError::InvalidArgument(format!("cascade target needs two output axes, got {other:?}"))),
    }
}

/// `(I(X; Y,Z), I(X; Z))` of `p0 * q`.
pub fn cascade_rates(p0: &Pmf, q: &CondPmf) -> Result<(f64, f64)> {
    let joint = compose(p0, q)?;
    let r1 = mutual_information(&joint, &[0], &[1, 2])?;
    let r2 = mutual_information(&joint.marginal(&[0, 2])?, &[0], &[1])?;
    Ok((r1, r2))
}

/// One scalarized solve per weight, in sweep order, without filtering.
pub fn scalarization_sweep(p0: &Pmf, target: &CondPmf, delta: f64, config: &SolverConfig) -> Result<Vec<RegionPoint>> {
    check_inputs(p0, target)?;
    config.validate()?;
    let (_, nz) = cascade_shape(target)?;
    let delta = clamp_delta(delta)?;
    let no = target.output_len();
    let z_map: Vec<usize> = (0..no).map(|o| o % nz).collect();
    config
        .scalarization_weights
        .iter()
        .map(|&lambda| {
            let groups =
                vec![Program::identity_group(no, lambda), Group { weight: 1.0 - lambda, map: z_map.clone(), size: nz }];
            let program = Program::new(p0.mass(), target, delta, groups);
            let out = minimize(&program, config);
            let argmin = finish_conditional(target, out.q);
            let (r1, r2) = cascade_rates(p0, &argmin)?;
            Ok(RegionPoint {
                r1,
                r2: Some(r2),
                delta,
                lambda: Some(lambda),
                argmin,
                certificate: out.certificate,
                converged: out.converged,
                iterations: out.iterations,
                provenance: Provenance::Solver,
            })
        })
        .collect()
}

/// Lower-left Pareto boundary of `(I(X; Y,Z), I(X; Z))` at fidelity `delta`.
pub fn solve_cascade(p0: &Pmf, target: &CondPmf, delta: f64, config: &SolverConfig) -> Result<Frontier> {
    let sweep = scalarization_sweep(p0, target, delta, config)?;
    let tol = config.duality_gap_tol;
    let mut keep: Vec<RegionPoint> = Vec::new();
    for (i, p) in sweep.iter().enumerate() {
        let (a1, a2) = (p.r1, p.r2.unwrap_or(0.0));
        let dominated = sweep.iter().enumerate().any(|(j, q)| {
            let (b1, b2) = (q.r1, q.r2.unwrap_or(0.0));
            let weakly = b1 <= a1 + tol && b2 <= a2 + tol;
            let strictly = b1 < a1 - tol || b2 < a2 - tol;
            // among near-identical points keep the first in sweep order
            j != i && weakly && (strictly || j < i)
        });
        if !dominated {
            keep.push(p.clone());
        }
    }
    keep.sort_by(|a, b| a.r1.total_cmp(&b.r1).then(b.r2.unwrap_or(0.0).total_cmp(&a.r2.unwrap_or(0.0))));
    Ok(Frontier { delta: sweep.first().map(|p| p.delta).unwrap_or(delta), points: keep })
}

/// Membership of a candidate rate tuple in the region at its own `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    /// Signed distance in bits: positive inside, negative outside.
    pub margin: f64,
}

/// Best `min(r1 - f1, r2 - f2)` over the segment `a -> b`.
fn segment_margin(r: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let m1 = |t: f64| r.0 - (a.0 + t * (b.0 - a.0));
    let m2 = |t: f64| r.1 - (a.1 + t * (b.1 - a.1));
    let mut best = m1(0.0).min(m2(0.0)).max(m1(1.0).min(m2(1.0)));
    let (s1, s2) = (-(b.0 - a.0), -(b.1 - a.1));
    if (s1 - s2).abs() > 0.0 {
        let t = (m2(0.0) - m1(0.0)) / (s1 - s2);
        if (0.0..=1.0).contains(&t) {
            best = best.max(m1(t).min(m2(t)));
        }
    }
    best
}

pub fn region_membership(
    p0: &Pmf,
    target: &CondPmf,
    candidate: &RegionPoint,
    config: &SolverConfig,
) -> Result<Membership> {
    let tol = config.duality_gap_tol;
    let margin = match candidate.r2 {
        None => {
            let point = solve_two_node(p0, target, candidate.delta, config)?;
            candidate.r1 - point.r1
        }
        Some(r2) => {
            let frontier = solve_cascade(p0, target, candidate.delta, config)?;
            let pts: Vec<(f64, f64)> = frontier.points.iter().map(|p| (p.r1, p.r2.unwrap_or(0.0))).collect();
            let mut best = f64::NEG_INFINITY;
            for (i, &a) in pts.iter().enumerate() {
                let b = pts.get(i + 1).copied().unwrap_or(a);
                best = best.max(segment_margin((candidate.r1, r2), a, b));
            }
            best
        }
    };
    Ok(Membership { member: margin >= -tol, margin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{h2, in_delta_neighborhood};

    fn id2() -> (Pmf, CondPmf) {
        (Pmf::uniform(2).unwrap(), CondPmf::identity(2).unwrap())
    }

    #[test]
    fn zero_delta_returns_target_information() {
        let (p0, id) = id2();
        let pt = solve_two_node(&p0, &id, 0.0, &SolverConfig::default()).unwrap();
        assert!((pt.r1 - 1.0).abs() < 1e-12);
        assert!(pt.converged);
    }

    #[test]
    fn identity_at_point_one() {
        let (p0, id) = id2();
        let cfg = SolverConfig::default();
        let pt = solve_two_node(&p0, &id, 0.1, &cfg).unwrap();
        assert!(pt.converged, "gap {} after {} iterations", pt.certificate, pt.iterations);
        assert!((pt.r1 - (1.0 - h2(0.1))).abs() < 1e-6, "{}", pt.r1);
        let joint = compose(&p0, &pt.argmin).unwrap();
        let tj = compose(&p0, &id).unwrap();
        assert!(in_delta_neighborhood(&joint, &tj, 0.1 + 1e-10).unwrap());
    }

    #[test]
    fn beyond_delta_star_is_free() {
        let (p0, id) = id2();
        let pt = solve_two_node(&p0, &id, 0.5, &SolverConfig::default()).unwrap();
        assert!(pt.r1 <= 1e-7);
        let pt = solve_two_node(&p0, &id, 3.0, &SolverConfig::default()).unwrap();
        assert_eq!(pt.delta, 1.0);
        assert!(solve_two_node(&p0, &id, -0.1, &SolverConfig::default()).is_err());
    }

    #[test]
    fn emptied_output_matches_alternating_minimization() {
        // the optimum drains the third output entirely; the reference value
        // comes from a tilted alternating minimization run to convergence
        let p0 = Pmf::new(vec![0.2201026169468953, 0.14623770395163882, 0.6336596791014659]).unwrap();
        let rows = vec![
            vec![0.23949500019987796, 0.3342904073948968, 0.4262145924052253],
            vec![0.23639917187076626, 0.7636008281292337, 0.0],
            vec![0.420102199721226, 0.579897800278774, 0.0],
        ];
        let target = CondPmf::from_rows(rows, vec![3]).unwrap();
        let pt = solve_two_node(&p0, &target, 0.10559084914976466, &SolverConfig::default()).unwrap();
        assert!(pt.converged, "gap {}", pt.certificate);
        assert!((pt.r1 - 0.003884117124).abs() < 1e-7, "{}", pt.r1);
        assert!(pt.argmin.rows().iter().skip(2).step_by(3).all(|&v| v < 1e-6));
    }

    #[test]
    fn cascade_corner_at_zero_delta() {
        let p0 = Pmf::uniform(2).unwrap();
        // Y copies X, Z is X through a BSC(0.2)
        let rows = vec![vec![0.8, 0.2, 0.0, 0.0], vec![0.0, 0.0, 0.2, 0.8]];
        let target = CondPmf::from_rows(rows, vec![2, 2]).unwrap();
        let f = solve_cascade(&p0, &target, 0.0, &SolverConfig::default()).unwrap();
        assert_eq!(f.points.len(), 1);
        assert!((f.points[0].r1 - 1.0).abs() < 1e-12);
        assert!((f.points[0].r2.unwrap() - (1.0 - h2(0.2))).abs() < 1e-12);
    }

    #[test]
    fn membership_examples() {
        let (p0, id) = id2();
        let cfg = SolverConfig::default();
        let frontier = solve_two_node(&p0, &id, 0.0, &cfg).unwrap();
        let mut cand = frontier.clone();
        cand.r1 += 0.1;
        let m = region_membership(&p0, &id, &cand, &cfg).unwrap();
        assert!(m.member && (m.margin - 0.1).abs() < 1e-9);
        cand.r1 = 0.0;
        assert!(!region_membership(&p0, &id, &cand, &cfg).unwrap().member);
        let m = region_membership(&p0, &id, &frontier, &cfg).unwrap();
        assert!(m.member && m.margin.abs() < 1e-9);
    }

    #[test]
    fn segment_margin_cases() {
        // candidate exactly at the midpoint of a segment
        let m = segment_margin((0.5, 0.5), (0.0, 1.0), (1.0, 0.0));
        assert!(m.abs() < 1e-15);
        assert!(segment_margin((0.6, 0.6), (0.0, 1.0), (1.0, 0.0)) > 0.09);
        assert!(segment_margin((0.4, 0.4), (0.0, 1.0), (1.0, 0.0)) < 0.0);
    }
}
