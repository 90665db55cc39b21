//! Smallest fidelity level whose neighborhood contains an input-independent
//! conditional.
//!
//! `delta* = min_r 1/2 sum_x p0(x) |p(.|x) - r|_1` over output pmfs `r`. The
//! objective is separable piecewise-linear, so the simplex multiplier can be
//! found exactly among the finitely many subgradient breakpoints.

use crate::error::Result;
use crate::prob::{CondPmf, JointPmf, Pmf};

use super::solver::check_inputs;

/// `delta*` together with one optimal output pmf.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaStar {
    pub value: f64,
    pub output: JointPmf,
}

struct Column {
    /// Sorted candidate points `{0, 1, p(o|x)}`.
    points: Vec<f64>,
    /// Weight at or below each point.
    w_le: Vec<f64>,
    /// Weight strictly below each point.
    w_lt: Vec<f64>,
}

impl Column {
    fn new(values: &[(f64, f64)]) -> Self {
        let mut points: Vec<f64> = values.iter().map(|v| v.0).chain([0.0, 1.0]).collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        let w_le = points.iter().map(|&c| values.iter().filter(|v| v.0 <= c).map(|v| v.1).sum()).collect();
        let w_lt = points.iter().map(|&c| values.iter().filter(|v| v.0 < c).map(|v| v.1).sum()).collect();
        Self { points, w_le, w_lt }
    }

    /// Interval of minimizers of `f(r) - tau * r` on `[0, 1]`.
    fn argmin(&self, tau: f64) -> (f64, f64) {
        let k = self.points.len();
        let lo = (0..k).find(|&i| i == k - 1 || self.w_le[i] - 0.5 - tau >= 0.0).map(|i| self.points[i]).unwrap();
        let hi = (0..k).rev().find(|&i| i == 0 || self.w_lt[i] - 0.5 - tau <= 0.0).map(|i| self.points[i]).unwrap();
        (lo, hi.max(lo))
    }
}

pub fn delta_star(p0: &Pmf, target: &CondPmf) -> Result<f64> {
    Ok(delta_star_with_output(p0, target)?.value)
}

pub fn delta_star_with_output(p0: &Pmf, target: &CondPmf) -> Result<DeltaStar> {
    check_inputs(p0, target)?;
    let no = target.output_len();
    let active: Vec<usize> = (0..p0.alphabet_size()).filter(|&x| p0.prob(x) > 0.0).collect();
    let columns: Vec<Column> = (0..no)
        .map(|o| {
            let vals: Vec<(f64, f64)> = active.iter().map(|&x| (target.row(x)[o], p0.prob(x))).collect();
            Column::new(&vals)
        })
        .collect();
    let mut taus: Vec<f64> = columns.iter().flat_map(|c| c.w_le.iter().chain(&c.w_lt).map(|w| w - 0.5)).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let mut r = vec![1.0 / no as f64; no];
    for &tau in &taus {
        let bounds: Vec<(f64, f64)> = columns.iter().map(|c| c.argmin(tau)).collect();
        let s_lo: f64 = bounds.iter().map(|b| b.0).sum();
        let s_hi: f64 = bounds.iter().map(|b| b.1).sum();
        if s_lo <= 1.0 + 1e-15 && s_hi >= 1.0 - 1e-15 {
            let theta = if s_hi > s_lo { ((1.0 - s_lo) / (s_hi - s_lo)).clamp(0.0, 1.0) } else { 0.0 };
            r = bounds.iter().map(|b| b.0 + theta * (b.1 - b.0)).collect();
            break;
        }
    }
    let total: f64 = r.iter().sum();
    r.iter_mut().for_each(|v| *v /= total);
    let value = 0.5
        * active
            .iter()
            .map(|&x| p0.prob(x) * target.row(x).iter().zip(&r).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .sum::<f64>();
    let output = JointPmf::from_parts_unchecked(target.output_shape().to_vec(), r);
    Ok(DeltaStar { value: value.clamp(0.0, 1.0), output })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_delta_star(p0: &Pmf, target: &CondPmf, steps: usize) -> f64 {
        // dense grid over binary output pmfs r = (1 - a, a)
        (0..=steps)
            .map(|i| {
                let a = i as f64 / steps as f64;
                let r = [1.0 - a, a];
                0.5 * (0..p0.alphabet_size())
                    .map(|x| p0.prob(x) * target.row(x).iter().zip(&r).map(|(u, v)| (u - v).abs()).sum::<f64>())
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identity_target_has_half() {
        let p0 = Pmf::uniform(2).unwrap();
        let id = CondPmf::identity(2).unwrap();
        let ds = delta_star_with_output(&p0, &id).unwrap();
        assert!((ds.value - 0.5).abs() < 1e-15);
        assert!((grid_delta_star(&p0, &id, 10_000) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn independent_target_has_zero() {
        let p0 = Pmf::new(vec![0.3, 0.7]).unwrap();
        let flat = CondPmf::from_rows(vec![vec![0.2, 0.8], vec![0.2, 0.8]], vec![2]).unwrap();
        assert!(delta_star(&p0, &flat).unwrap().abs() < 1e-15);
    }

    #[test]
    fn matches_grid_on_binary_instances() {
        let cases = [
            (vec![0.3, 0.7], vec![vec![0.9, 0.1], vec![0.25, 0.75]]),
            (vec![0.5, 0.5], vec![vec![0.6, 0.4], vec![0.1, 0.9]]),
            (vec![0.8, 0.2], vec![vec![0.05, 0.95], vec![0.7, 0.3]]),
        ];
        for (p, rows) in cases {
            let p0 = Pmf::new(p).unwrap();
            let t = CondPmf::from_rows(rows, vec![2]).unwrap();
            let exact = delta_star(&p0, &t).unwrap();
            let grid = grid_delta_star(&p0, &t, 10_000);
            assert!(exact <= grid + 1e-12);
            assert!(grid - exact < 1e-4, "exact {exact} grid {grid}");
        }
    }

    #[test]
    fn bounded_by_uniform_output() {
        let p0 = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let t =
            CondPmf::from_rows(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.1, 0.8], vec![0.3, 0.4, 0.3]], vec![3]).unwrap();
        let ds = delta_star(&p0, &t).unwrap();
        let uniform =
            0.5 * (0..3).map(|x| p0.prob(x) * t.row(x).iter().map(|v| (v - 1.0 / 3.0).abs()).sum::<f64>()).sum::<f64>();
        assert!(ds <= uniform + 1e-15);
        // every vertex of a fine simplex grid is no better
        let steps = 200;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let r = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
                let v = 0.5
                    * (0..3)
                        .map(|x| p0.prob(x) * t.row(x).iter().zip(&r).map(|(a, b)| (a - b).abs()).sum::<f64>())
                        .sum::<f64>();
                assert!(ds <= v + 1e-12);
            }
        }
    }
}
