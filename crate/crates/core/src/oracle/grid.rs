use std::time::Instant;

use super::report::{Instance, Optimizer, OracleReport};
use crate::error::{CoordError, Result};
use crate::prob::{entropy, CondPmf, Pmf, MASS_TOL};

/// Largest number of free conditional parameters, `|X| (|Y| - 1)`.
pub const GRID_PARAMETER_GUARD: usize = 3;
/// Largest number of grid points enumerated.
pub const GRID_POINT_GUARD: u64 = 2_000_000_000;

/// Lipschitz constant of `I(X; Y)`, per unit of grid step, between
/// neighboring grid points whose entries are all at least `step`.
///
/// Moving one row by at most `step` in each free coordinate changes the
/// information by at most `p0(x) (|Y| - 1) step log2(1 / (p0(x) step))`,
/// because the partial derivatives `p0(x) log2(q(y|x) / q(y))` then lie in
/// `[p0(x) log2(step), p0(x) log2(1 / p0(x))]`. Summing over rows gives
/// `L = (|Y| - 1) (H(p0) + log2(1 / step))`.
pub fn grid_lipschitz(p0: &Pmf, outputs: usize, step: f64) -> f64 {
    outputs.saturating_sub(1) as f64 * (entropy(p0.mass()) + (1.0 / step).log2())
}

/// Values `center + k step` inside `[0, 1]`, plus both endpoints.
fn axis_values(center: f64, step: f64) -> Vec<f64> {
    let below = (center / step + 1e-9).floor() as i64;
    let above = ((1.0 - center) / step + 1e-9).floor() as i64;
    let mut values: Vec<f64> =
        (-below..=above).map(|k| (center + k as f64 * step).clamp(0.0, 1.0)).chain([0.0, 1.0]).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

struct Row {
    q: Vec<f64>,
    /// `p0(x)` times the row's TV distance to the target row.
    cost: f64,
    /// `p0(x) H(q)`.
    conditional_entropy: f64,
}

fn grid_rows(p0x: f64, target: &[f64], step: f64) -> Vec<Row> {
    let no = target.len();
    let axes: Vec<Vec<f64>> = target[..no - 1].iter().map(|&c| axis_values(c, step)).collect();
    let mut rows = Vec::new();
    let mut q = vec![0.0; no];
    fill(&axes, 0, 0.0, &mut q, &mut |q| {
        let cost = p0x * 0.5 * q.iter().zip(target).map(|(a, b)| (a - b).abs()).sum::<f64>();
        rows.push(Row { q: q.to_vec(), cost, conditional_entropy: p0x * entropy(q) });
    });
    // cheapest rows first so the product walk can stop early
    rows.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    rows
}

fn fill(axes: &[Vec<f64>], j: usize, used: f64, q: &mut [f64], out: &mut impl FnMut(&[f64])) {
    if j == axes.len() {
        q[j] = (1.0 - used).max(0.0);
        out(q);
        return;
    }
    for &v in &axes[j] {
        if used + v > 1.0 + 1e-12 {
            break;
        }
        q[j] = v;
        fill(axes, j + 1, used + v, q, out);
    }
}

struct Walk<'a> {
    p0: &'a [f64],
    rows: &'a [Vec<Row>],
    budget: f64,
    no: usize,
    marginals: Vec<Vec<f64>>,
    picked: Vec<usize>,
    evaluated: u64,
    best: (f64, Vec<usize>),
}

impl Walk<'_> {
    fn descend(&mut self, x: usize, cost: f64, conditional: f64) {
        if x == self.rows.len() {
            self.evaluated += 1;
            let value = (entropy(&self.marginals[x]) - conditional).max(0.0);
            if value < self.best.0 {
                self.best = (value, self.picked.clone());
            }
            return;
        }
        for (i, row) in self.rows[x].iter().enumerate() {
            if cost + row.cost > self.budget {
                break;
            }
            for y in 0..self.no {
                self.marginals[x + 1][y] = self.marginals[x][y] + self.p0[x] * row.q[y];
            }
            self.picked[x] = i;
            self.descend(x + 1, cost + row.cost, conditional + row.conditional_entropy);
        }
    }
}

/// Minimum of `I(X; Y)` over grid conditionals within TV `delta` of the
/// target.
///
/// Each free coordinate of a row ranges over `target + k grid_step` inside
/// `[0, 1]` together with the endpoints, so the target itself is always a
/// grid point; the last coordinate of a row takes the remaining mass. Rows
/// of zero-probability inputs are held at the target row. Membership uses
/// the same `MASS_TOL` slack as [`crate::prob::in_delta_neighborhood`].
/// The reported discretization bound is `grid_lipschitz * grid_step`.
pub fn grid_min_mi(p0: &Pmf, target: &CondPmf, delta: f64, grid_step: f64) -> Result<OracleReport> {
    let start = Instant::now();
    if p0.alphabet_size() != target.input_size() {
        return Err(CoordError::ShapeMismatch { left: vec![p0.alphabet_size()], right: vec![target.input_size()] });
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(CoordError::NegativeDelta(delta));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(CoordError::InvalidArgument(format!("grid step must lie in (0, 1], got {grid_step}")));
    }
    let (nx, no) = (target.input_size(), target.output_len());
    let parameters = nx * (no - 1);
    if parameters > GRID_PARAMETER_GUARD {
        return Err(CoordError::GuardExceeded { size: parameters as u128, limit: GRID_PARAMETER_GUARD as u128 });
    }
    let rows: Vec<Vec<Row>> = (0..nx)
        .map(|x| {
            let p0x = p0.prob(x);
            if p0x > 0.0 {
                grid_rows(p0x, target.row(x), grid_step)
            } else {
                vec![Row { q: target.row(x).to_vec(), cost: 0.0, conditional_entropy: 0.0 }]
            }
        })
        .collect();
    let size = rows.iter().try_fold(1u64, |acc, r| acc.checked_mul(r.len() as u64)).unwrap_or(u64::MAX);
    if size > GRID_POINT_GUARD {
        return Err(CoordError::GuardExceeded { size: size as u128, limit: GRID_POINT_GUARD as u128 });
    }

    let mut walk = Walk {
        p0: p0.mass(),
        rows: &rows,
        budget: delta + MASS_TOL,
        no,
        marginals: vec![vec![0.0; no]; nx + 1],
        picked: vec![0; nx],
        evaluated: 0,
        best: (f64::INFINITY, Vec::new()),
    };
    walk.descend(0, 0.0, 0.0);
    let (optimum, picked) = walk.best;
    let mass: Vec<f64> = picked.iter().enumerate().flat_map(|(x, &i)| rows[x][i].q.iter().copied()).collect();
    let argmin = CondPmf::from_parts_unchecked(nx, target.output_shape().to_vec(), mass);
    Ok(OracleReport {
        instance: Instance::Grid { p0: p0.clone(), target: target.clone(), delta, grid_step },
        optimum,
        optimizer: Optimizer::Conditional(argmin),
        search_space_size: size,
        evaluated: walk.evaluated,
        discretization_bound: Some(grid_lipschitz(p0, no, grid_step) * grid_step),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{compose, h2, mutual_information};

    fn id2() -> (Pmf, CondPmf) {
        (Pmf::uniform(2).unwrap(), CondPmf::identity(2).unwrap())
    }

    #[test]
    fn axis_contains_center_and_endpoints() {
        let v = axis_values(0.3, 0.25);
        assert_eq!(v.first(), Some(&0.0));
        assert_eq!(v.last(), Some(&1.0));
        assert!(v.contains(&0.3));
        for want in [0.05, 0.55, 0.8] {
            assert!(v.iter().any(|&a| (a - want).abs() < 1e-12), "{want} missing from {v:?}");
        }
    }

    #[test]
    fn zero_delta_keeps_the_target() {
        let p0 = Pmf::new(vec![0.3, 0.7]).unwrap();
        let q = CondPmf::binary_symmetric(0.17).unwrap();
        let r = grid_min_mi(&p0, &q, 0.0, 0.01).unwrap();
        let exact = mutual_information(&compose(&p0, &q).unwrap(), &[0], &[1]).unwrap();
        assert!((r.optimum - exact).abs() < 1e-12);
        assert_eq!(r.evaluated, 1);
    }

    #[test]
    fn full_ball_reaches_zero() {
        let (p0, id) = id2();
        let r = grid_min_mi(&p0, &id, 1.0, 0.05).unwrap();
        assert!(r.optimum.abs() < 1e-12);
        assert_eq!(r.evaluated, r.search_space_size);
    }

    #[test]
    fn identity_at_point_one() {
        let (p0, id) = id2();
        let r = grid_min_mi(&p0, &id, 0.1, 1e-3).unwrap();
        assert!((r.optimum - (1.0 - h2(0.1))).abs() < 1e-9, "{}", r.optimum);
        assert_eq!(r.search_space_size, 1001 * 1001);
        assert!(r.discretization_bound.unwrap() < 0.02);
    }

    #[test]
    fn guards() {
        let p0 = Pmf::uniform(2).unwrap();
        let q = CondPmf::from_rows(vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5]], vec![3]).unwrap();
        assert!(matches!(grid_min_mi(&p0, &q, 0.1, 0.1), Err(CoordError::GuardExceeded { .. })));
        let (p0, id) = id2();
        assert!(grid_min_mi(&p0, &id, 0.1, 0.0).is_err());
        assert!(grid_min_mi(&p0, &id, -0.1, 0.1).is_err());
    }

    #[test]
    fn ternary_output_single_input() {
        let p0 = Pmf::uniform(1).unwrap();
        let q = CondPmf::from_rows(vec![vec![0.2, 0.3, 0.5]], vec![3]).unwrap();
        // with one input the information is always zero
        let r = grid_min_mi(&p0, &q, 0.1, 0.1).unwrap();
        assert_eq!(r.optimum, 0.0);
        assert!(r.evaluated > 1);
    }
}
