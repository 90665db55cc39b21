//! The convex program behind every region point: minimize a weighted sum of
//! mutual informations over conditionals `q` whose composition with the
//! source stays within total variation `delta` of the composed target.
//!
//! With `w_x = p0(x)`, the constraint reads
//! `sum_x w_x * |q_x - p_x|_1 <= 2 * delta`, rows on the simplex. Rows with
//! `p0(x) = 0` never affect either side and stay pinned to the target row.

use crate::prob::CondPmf;

/// Weight of the uniform mixture applied before linearizing at a boundary
/// point, keeping all log ratios finite.
const SMOOTHING: f64 = 1e-10;

#[derive(Clone, Debug)]
pub(crate) struct Group {
    pub weight: f64,
    /// Output index -> group symbol.
    pub map: Vec<usize>,
    pub size: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Program {
    pub nx: usize,
    pub no: usize,
    pub p0: Vec<f64>,
    pub target: Vec<f64>,
    pub active: Vec<bool>,
    /// Outputs carrying target mass in some active row. The rest stay at
    /// zero: folding such an output into a live one never raises the
    /// objective nor the distance.
    pub live: Vec<usize>,
    /// `2 * delta`, the weighted-l1 radius.
    pub budget: f64,
    pub groups: Vec<Group>,
}

impl Program {
    pub fn new(p0: &[f64], target: &CondPmf, delta: f64, groups: Vec<Group>) -> Self {
        let nx = target.input_size();
        let no = target.output_len();
        let live = (0..no).filter(|&o| (0..nx).any(|x| p0[x] > 0.0 && target.row(x)[o] > 0.0)).collect();
        Self {
            live,
            nx,
            no,
            p0: p0.to_vec(),
            target: target.rows().to_vec(),
            active: p0.iter().map(|&w| w > 0.0).collect(),
            budget: 2.0 * delta,
            groups: groups.into_iter().filter(|g| g.weight > 0.0).collect(),
        }
    }

    pub fn identity_group(no: usize, weight: f64) -> Group {
        Group { weight, map: (0..no).collect(), size: no }
    }

    pub(crate) fn grouped(&self, g: &Group, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut qg = vec![0.0; self.nx * g.size];
        let mut rg = vec![0.0; g.size];
        for x in 0..self.nx {
            for o in 0..self.no {
                qg[x * g.size + g.map[o]] += q[x * self.no + o];
            }
            if self.active[x] {
                for k in 0..g.size {
                    rg[k] += self.p0[x] * qg[x * g.size + k];
                }
            }
        }
        (qg, rg)
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        let mut total = 0.0;
        for g in &self.groups {
            let (qg, rg) = self.grouped(g, q);
            let mut mi = 0.0;
            for x in (0..self.nx).filter(|&x| self.active[x]) {
                for k in 0..g.size {
                    mi += self.p0[x] * crate::prob::plogq(qg[x * g.size + k], rg[k]);
                }
            }
            total += g.weight * mi.max(0.0);
        }
        total
    }

    /// `(1 - SMOOTHING) q + SMOOTHING * uniform` on the live outputs of
    /// active rows.
    pub fn lift(&self, q: &[f64]) -> Vec<f64> {
        let mut out = q.to_vec();
        let u = SMOOTHING / self.live.len() as f64;
        for x in (0..self.nx).filter(|&x| self.active[x]) {
            for &o in &self.live {
                let i = x * self.no + o;
                out[i] = (1.0 - SMOOTHING) * q[i] + u;
            }
        }
        out
    }

    /// Gradient of the objective at `q`; finite wherever every live entry
    /// of an active row is positive.
    pub fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let mut values = vec![0.0; self.nx * self.no];
        for g in &self.groups {
            let (qg, rg) = self.grouped(g, q);
            for x in (0..self.nx).filter(|&x| self.active[x]) {
                let w = self.p0[x];
                for &o in &self.live {
                    let k = g.map[o];
                    let (a, r) = (qg[x * g.size + k], rg[k]);
                    if a > 0.0 && r > 0.0 {
                        values[x * self.no + o] += g.weight * w * (a / r).log2();
                    }
                }
            }
        }
        values
    }

    /// Linearization lower bound on the minimum, taken at `q` itself when
    /// every free entry is positive and at `lift(q)` otherwise.
    pub fn lower_bound(&self, q: &[f64]) -> f64 {
        let interior =
            (0..self.nx).filter(|&x| self.active[x]).all(|x| self.live.iter().all(|&o| q[x * self.no + o] > 0.0));
        let point = if interior { q.to_vec() } else { self.lift(q) };
        let g = self.gradient(&point);
        let s = self.linear_minimizer(&g);
        let slope: f64 = s.iter().zip(&point).zip(&g).map(|((s, l), g)| g * (s - l)).sum();
        self.value(&point) + slope
    }

    /// Minimizer of `<g, s>` over the feasible polytope: a fractional
    /// knapsack over mass moves from the target towards each row's best
    /// output, taken in order of gain per unit budget.
    pub fn linear_minimizer(&self, g: &[f64]) -> Vec<f64> {
        let mut s = self.target.clone();
        let mut budget = self.budget;
        let mut moves: Vec<(f64, usize, usize, usize)> = Vec::new();
        for x in (0..self.nx).filter(|&x| self.active[x]) {
            let row = &g[x * self.no..(x + 1) * self.no];
            let best = self.live.iter().copied().fold(self.live[0], |b, o| if row[o] < row[b] { o } else { b });
            for &o in &self.live {
                if o != best && self.target[x * self.no + o] > 0.0 && row[o] > row[best] {
                    moves.push(((row[o] - row[best]) / (2.0 * self.p0[x]), x, o, best));
                }
            }
        }
        moves.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (_, x, o, best) in moves {
            if budget <= 0.0 {
                break;
            }
            let cost_per_unit = 2.0 * self.p0[x];
            let amount = self.target[x * self.no + o].min(budget / cost_per_unit);
            s[x * self.no + o] -= amount;
            s[x * self.no + best] += amount;
            budget -= amount * cost_per_unit;
        }
        s
    }

    /// `q` with negative entries cleared and every row rescaled to sum to one.
    pub fn normalized(&self, q: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = q.iter().map(|v| v.max(0.0)).collect();
        for row in q.chunks_mut(self.no) {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|v| *v /= total);
            }
        }
        q
    }

    /// `sum_x p0(x) |q_x - p_x|_1`, twice the TV distance to the target.
    pub fn weighted_l1(&self, q: &[f64]) -> f64 {
        (0..self.nx)
            .filter(|&x| self.active[x])
            .map(|x| {
                let r = x * self.no..(x + 1) * self.no;
                self.p0[x] * q[r.clone()].iter().zip(&self.target[r]).map(|(a, b)| (a - b).abs()).sum::<f64>()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knapsack_minimizer_is_feasible_and_optimal_on_vertices() {
        let target = CondPmf::from_rows(vec![vec![0.7, 0.3], vec![0.2, 0.8]], vec![2]).unwrap();
        let prog = Program::new(&[0.4, 0.6], &target, 0.1, vec![Program::identity_group(2, 1.0)]);
        let g = [1.0, -1.0, 0.5, 0.0];
        let s = prog.linear_minimizer(&g);
        assert!(prog.weighted_l1(&s) <= prog.budget + 1e-15);
        let value: f64 = s.iter().zip(&g).map(|(a, b)| a * b).sum();
        // grid over the two free parameters
        let mut best = f64::INFINITY;
        for i in 0..=1000 {
            for j in 0..=1000 {
                let q = [1.0 - i as f64 / 1000.0, i as f64 / 1000.0, 1.0 - j as f64 / 1000.0, j as f64 / 1000.0];
                if prog.weighted_l1(&q) <= prog.budget + 1e-12 {
                    best = best.min(q.iter().zip(&g).map(|(a, b)| a * b).sum());
                }
            }
        }
        assert!(value <= best + 1e-12);
        assert!(value >= best - 2e-3);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let target = CondPmf::from_rows(vec![vec![0.5, 0.2, 0.2, 0.1], vec![0.1, 0.3, 0.4, 0.2]], vec![2, 2]).unwrap();
        let groups = vec![Program::identity_group(4, 0.3), Group { weight: 0.7, map: vec![0, 1, 0, 1], size: 2 }];
        let prog = Program::new(&[0.35, 0.65], &target, 0.1, groups);
        let q = target.rows().to_vec();
        let g = prog.gradient(&q);
        let h = 1e-7;
        for i in 0..q.len() {
            let (mut up, mut down) = (q.clone(), q.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (prog.value(&up) - prog.value(&down)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "entry {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn lower_bound_never_exceeds_feasible_values() {
        let target = CondPmf::from_rows(vec![vec![0.9, 0.1, 0.0], vec![0.0, 0.3, 0.7]], vec![3]).unwrap();
        let prog = Program::new(&[0.5, 0.5], &target, 0.15, vec![Program::identity_group(3, 1.0)]);
        let bound = prog.lower_bound(target.rows());
        let steps = 40;
        let mut best = f64::INFINITY;
        for a in 0..=steps {
            for b in 0..=(steps - a) {
                for c in 0..=steps {
                    for d in 0..=(steps - c) {
                        let f = |k: usize| k as f64 / steps as f64;
                        let q = [f(a), f(b), 1.0 - f(a) - f(b), f(c), f(d), 1.0 - f(c) - f(d)];
                        if prog.weighted_l1(&q) <= prog.budget {
                            best = best.min(prog.value(&q));
                        }
                    }
                }
            }
        }
        assert!(bound <= best, "{bound} > {best}");
        assert!(prog.live == vec![0, 1, 2]);
    }
}
