//! Newton barrier method on the region program.
//!
//! The absolute values in the fidelity constraint are split with slack
//! variables `d >= |q - p|`, leaving a smooth objective over a polytope in
//! `(q, d)`. Centering steps solve the equality-constrained Newton system
//! densely; the barrier weight grows geometrically and every centered point
//! is scored on the original program.

use nalgebra::{DMatrix, DVector};

use super::program::Program;

/// Growth factor of the barrier weight between centerings.
const GROWTH: f64 = 8.0;
/// Newton decrement (halved) at which a centering is considered done.
const CENTERED: f64 = 1e-9;
/// Newton steps allowed per centering.
const CENTERING_STEPS: usize = 60;
/// Fraction of the distance to the boundary a step may cover.
const STEP_BACK: f64 = 0.99;

pub(crate) struct Barrier<'a> {
    program: &'a Program,
    rows: Vec<usize>,
    /// Source weight and target value of every free entry, row-major over
    /// `rows x program.live`.
    weight: Vec<f64>,
    target: Vec<f64>,
}

/// Slacks of the inequalities at a point: `q`, `d - q + p`, `d + q - p`
/// and the remaining budget.
struct Slacks {
    below: Vec<f64>,
    minus: Vec<f64>,
    plus: Vec<f64>,
    budget: f64,
}

impl<'a> Barrier<'a> {
    pub fn new(program: &'a Program) -> Self {
        let rows: Vec<usize> = (0..program.nx).filter(|&x| program.active[x]).collect();
        let mut weight = Vec::new();
        let mut target = Vec::new();
        for &x in &rows {
            for &o in &program.live {
                weight.push(program.p0[x]);
                target.push(program.target[x * program.no + o]);
            }
        }
        Self { program, rows, weight, target }
    }

    fn len(&self) -> usize {
        self.weight.len()
    }

    /// Number of inequality constraints, the barrier's gap per unit weight.
    fn constraints(&self) -> usize {
        3 * self.len() + 1
    }

    /// Conditional on the full output alphabet with `q` on the free entries.
    pub fn full(&self, q: &[f64]) -> Vec<f64> {
        let p = self.program;
        let mut out = p.target.clone();
        let k = p.live.len();
        for (a, &x) in self.rows.iter().enumerate() {
            out[x * p.no..(x + 1) * p.no].iter_mut().for_each(|v| *v = 0.0);
            for (j, &o) in p.live.iter().enumerate() {
                out[x * p.no + o] = q[a * k + j];
            }
        }
        out
    }

    fn slacks(&self, z: &[f64]) -> Option<Slacks> {
        let n = self.len();
        let (q, d) = z.split_at(n);
        let minus: Vec<f64> = (0..n).map(|i| d[i] - q[i] + self.target[i]).collect();
        let plus: Vec<f64> = (0..n).map(|i| d[i] + q[i] - self.target[i]).collect();
        let used: f64 = (0..n).map(|i| self.weight[i] * d[i]).sum();
        let s = Slacks { below: q.to_vec(), minus, plus, budget: self.program.budget - used };
        let positive = s.budget > 0.0 && s.below.iter().chain(&s.minus).chain(&s.plus).all(|&v| v > 0.0);
        positive.then_some(s)
    }

    fn potential(&self, t: f64, z: &[f64]) -> f64 {
        let Some(s) = self.slacks(z) else {
            return f64::INFINITY;
        };
        let logs: f64 = s.below.iter().chain(&s.minus).chain(&s.plus).map(|v| v.ln()).sum::<f64>() + s.budget.ln();
        t * self.program.value(&self.full(&z[..self.len()])) - logs
    }

    /// Strictly feasible start between the target and the uniform rows.
    fn start(&self) -> Vec<f64> {
        let n = self.len();
        let k = self.program.live.len();
        let budget = self.program.budget;
        let theta = (budget / 8.0).min(0.5);
        let q: Vec<f64> = (0..n).map(|i| (1.0 - theta) * self.target[i] + theta / k as f64).collect();
        let used: f64 = (0..n).map(|i| self.weight[i] * (q[i] - self.target[i]).abs()).sum();
        let pad = (0.875 * budget - used).max(0.0) / k as f64;
        let d: Vec<f64> = (0..n).map(|i| (q[i] - self.target[i]).abs() + pad).collect();
        [q, d].concat()
    }

    /// Gradient and Hessian of `t f + barrier` in `(q, d)`.
    fn derivatives(&self, t: f64, z: &[f64], s: &Slacks) -> (DVector<f64>, DMatrix<f64>) {
        let p = self.program;
        let n = self.len();
        let k = p.live.len();
        let full = self.full(&z[..n]);
        let grad_f = p.gradient(&full);
        let mut g = DVector::zeros(2 * n);
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        for (a, &x) in self.rows.iter().enumerate() {
            for (j, &o) in p.live.iter().enumerate() {
                g[a * k + j] = t * grad_f[x * p.no + o];
            }
        }
        for group in &p.groups {
            let (qg, rg) = p.grouped(group, &full);
            let scale = t * group.weight / std::f64::consts::LN_2;
            for (a, &x) in self.rows.iter().enumerate() {
                for (b, &y) in self.rows.iter().enumerate() {
                    for (j, &o) in p.live.iter().enumerate() {
                        let c = group.map[o];
                        for (l, &u) in p.live.iter().enumerate() {
                            if group.map[u] != c {
                                continue;
                            }
                            let mut v = -p.p0[x] * p.p0[y] / rg[c];
                            if a == b {
                                v += p.p0[x] / qg[x * group.size + c];
                            }
                            h[(a * k + j, b * k + l)] += scale * v;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            let (b, m, pl) = (s.below[i], s.minus[i], s.plus[i]);
            g[i] += -1.0 / b + 1.0 / m - 1.0 / pl;
            g[n + i] += -1.0 / m - 1.0 / pl + self.weight[i] / s.budget;
            let (b2, m2, p2) = (1.0 / (b * b), 1.0 / (m * m), 1.0 / (pl * pl));
            h[(i, i)] += b2 + m2 + p2;
            h[(i, n + i)] += p2 - m2;
            h[(n + i, i)] += p2 - m2;
            h[(n + i, n + i)] += m2 + p2;
            for l in 0..n {
                h[(n + i, n + l)] += self.weight[i] * self.weight[l] / (s.budget * s.budget);
            }
        }
        (g, h)
    }

    /// Newton direction keeping every row sum fixed.
    fn direction(&self, g: &DVector<f64>, h: &DMatrix<f64>) -> Option<DVector<f64>> {
        let n = self.len();
        let k = self.program.live.len();
        let m = self.rows.len();
        let size = 2 * n + m;
        let mut kkt = DMatrix::zeros(size, size);
        kkt.view_mut((0, 0), (2 * n, 2 * n)).copy_from(h);
        for a in 0..m {
            for j in 0..k {
                kkt[(2 * n + a, a * k + j)] = 1.0;
                kkt[(a * k + j, 2 * n + a)] = 1.0;
            }
        }
        let mut rhs = DVector::zeros(size);
        rhs.rows_mut(0, 2 * n).copy_from(&(-g));
        let sol = kkt.full_piv_lu().solve(&rhs)?;
        Some(sol.rows(0, 2 * n).into_owned())
    }

    /// Largest step along `dz` that keeps every slack positive, scaled back.
    fn max_step(&self, s: &Slacks, dz: &DVector<f64>) -> f64 {
        let n = self.len();
        let mut alpha = f64::INFINITY;
        let mut limit = |slack: f64, rate: f64| {
            if rate < 0.0 {
                alpha = alpha.min(-slack / rate);
            }
        };
        let mut spend = 0.0;
        for i in 0..n {
            let (dq, dd) = (dz[i], dz[n + i]);
            limit(s.below[i], dq);
            limit(s.minus[i], dd - dq);
            limit(s.plus[i], dd + dq);
            spend += self.weight[i] * dd;
        }
        limit(s.budget, -spend);
        (STEP_BACK * alpha).min(1.0)
    }

    /// Runs centerings for increasing barrier weights, handing every
    /// centered point (as a full conditional) to `score`, which returns
    /// `true` to stop. Returns the number of Newton steps taken.
    pub fn run(&self, max_steps: usize, gap_floor: f64, mut score: impl FnMut(&[f64]) -> bool) -> usize {
        let n = self.len();
        if n == 0 || self.program.budget <= 0.0 {
            return 0;
        }
        let mut z = self.start();
        let m = self.constraints() as f64;
        let mut t = 1.0f64;
        let mut steps = 0;
        loop {
            let budget = (steps + CENTERING_STEPS).min(max_steps);
            while steps < budget {
                let Some(s) = self.slacks(&z) else { break };
                let (g, h) = self.derivatives(t, &z, &s);
                let Some(dz) = self.direction(&g, &h) else { break };
                let decrement = -g.dot(&dz);
                if decrement.is_nan() || decrement <= 2.0 * CENTERED {
                    break;
                }
                steps += 1;
                let here = self.potential(t, &z);
                let mut alpha = self.max_step(&s, &dz);
                let slack = 1e-13 * here.abs();
                let next = loop {
                    let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(v, d)| v + alpha * d).collect();
                    if self.potential(t, &trial) <= here - 0.25 * alpha * decrement + slack {
                        break Some(trial);
                    }
                    alpha *= 0.5;
                    if alpha < 1e-12 {
                        break None;
                    }
                };
                match next {
                    Some(trial) => z = trial,
                    None => break,
                }
            }
            if score(&self.full(&z[..n])) || steps >= max_steps || m / t < gap_floor {
                return steps;
            }
            t *= GROWTH;
        }
    }
}
