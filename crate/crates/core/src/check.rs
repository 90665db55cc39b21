//! Invariant battery behind `coordlab check`, plus the random instance
//! generators it shares with the test suites.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::code::{
    block_repeat, build_codebook_code, expected_tv_exact, induced_distribution, Codebook, CoordinationCode, Encoder,
};
use crate::error::Result;
use crate::oracle::{exhaustive_best_code, grid_min_mi, theorem_consistency_scan, Optimizer, ScanOptions};
use crate::prob::{
    averaged_marginals, brute_force_expected_type, compose, joint_type, mutual_information, total_variation, CondPmf,
    JointPmf, Pmf,
};
use crate::region::{delta_star, solve_cascade, solve_two_node, SolverConfig};

/// Result of one property over its cases.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub property: &'static str,
    pub cases: usize,
    /// The first failing case, with an instance that reproduces it.
    pub violation: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Dirichlet(1, ..., 1) draw.
pub fn random_pmf(rng: &mut impl Rng, size: usize) -> Pmf {
    let w: Vec<f64> = (0..size).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-12).collect();
    let total: f64 = w.iter().sum();
    Pmf::new(w.iter().map(|v| v / total).collect()).expect("normalized weights form a pmf")
}

/// Conditional with independent Dirichlet(1) rows.
pub fn random_conditional(rng: &mut impl Rng, inputs: usize, output_shape: &[usize]) -> CondPmf {
    let width = output_shape.iter().product();
    let rows = (0..inputs).map(|_| random_pmf(rng, width).mass().to_vec()).collect();
    CondPmf::from_rows(rows, output_shape.to_vec()).expect("rows are pmfs")
}

fn table_code(m1: usize, y: &[u8], encoder: &[u32], z: Option<(&[u8], &[u32])>) -> CoordinationCode {
    let book = |w: &[u8]| Codebook::from_words(&w.iter().map(|&s| vec![s]).collect::<Vec<_>>(), 1, 2).unwrap();
    let rate = |m: usize| (m as f64).log2();
    let encoder = Encoder::Table(encoder.to_vec());
    match z {
        None => CoordinationCode::two_node(1, rate(m1), 2, encoder, book(y)).unwrap(),
        Some((z, recoder)) => {
            CoordinationCode::cascade(1, rate(m1), rate(z.len()), 2, encoder, recoder.to_vec(), book(y), book(z))
                .unwrap()
        }
    }
}

/// Tuples over `0..base` of the given length, first entry most significant.
fn tuples(base: usize, len: usize) -> Vec<Vec<usize>> {
    (0..base.pow(len as u32))
        .map(|mut i| {
            let mut t = vec![0; len];
            for slot in t.iter_mut().rev() {
                *slot = i % base;
                i /= base;
            }
            t
        })
        .collect()
}

/// Every deterministic blocklength-1 code over binary alphabets with at
/// most two messages per hop: 18 two-node and 308 cascade codes.
pub fn binary_code_battery() -> Vec<CoordinationCode> {
    let mut codes = Vec::new();
    for m1 in 1..=2usize {
        for y in tuples(2, m1) {
            let y: Vec<u8> = y.iter().map(|&s| s as u8).collect();
            for enc in tuples(m1, 2) {
                let enc: Vec<u32> = enc.iter().map(|&i| i as u32).collect();
                codes.push(table_code(m1, &y, &enc, None));
                for m2 in 1..=2usize {
                    for z in tuples(2, m2) {
                        let z: Vec<u8> = z.iter().map(|&s| s as u8).collect();
                        for rec in tuples(m2, m1) {
                            let rec: Vec<u32> = rec.iter().map(|&j| j as u32).collect();
                            codes.push(table_code(m1, &y, &enc, Some((&z, &rec))));
                        }
                    }
                }
            }
        }
    }
    codes
}

fn outcome(property: &'static str, cases: usize, violation: Option<String>) -> CheckOutcome {
    CheckOutcome { property, cases, violation }
}

/// Runs `check` on every case and keeps the first failure.
fn over<T>(property: &'static str, cases: Vec<T>, mut check: impl FnMut(&T) -> Result<Option<String>>) -> CheckOutcome {
    let count = cases.len();
    for case in &cases {
        match check(case) {
            Ok(None) => {}
            Ok(Some(v)) => return outcome(property, count, Some(v)),
            Err(e) => return outcome(property, count, Some(format!("error: {e}"))),
        }
    }
    outcome(property, count, None)
}

fn instance<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_else(|e| format!("<unserializable: {e}>"))
}

fn expected_type_identity(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let cases: Vec<(usize, usize)> = (0..20).map(|_| (rng.gen_range(1..=3), rng.gen_range(1..=3))).collect();
    let laws: Vec<(usize, usize, Pmf, Vec<i64>)> = cases
        .iter()
        .map(|&(n, a)| {
            let len = a.pow(n as u32);
            (n, a, random_pmf(rng, len), (0..len).map(|_| rng.gen_range(0..50)).collect())
        })
        .collect();
    over("expected type equals averaged marginals", laws, |(n, a, law, weights)| {
        let brute = brute_force_expected_type(law.mass(), *n, *a)?;
        let avg = averaged_marginals(law.mass(), *n, *a)?;
        if brute.iter().zip(&avg).any(|(x, y)| (x - y).abs() > 1e-12) {
            return Ok(Some(instance(&json!({"n": n, "alphabet": a, "law": law.mass()}))));
        }
        let total: i64 = weights.iter().sum::<i64>().max(1);
        let exact: Vec<Ratio<i64>> = weights.iter().map(|&w| Ratio::new(w, total)).collect();
        if brute_force_expected_type(&exact, *n, *a)? != averaged_marginals(&exact, *n, *a)? {
            return Ok(Some(instance(&json!({"n": n, "alphabet": a, "weights": weights}))));
        }
        Ok(None)
    })
}

fn tv_metric(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let triples: Vec<[JointPmf; 3]> = (0..200)
        .map(|_| {
            let draw = |rng: &mut ChaCha8Rng| JointPmf::new(vec![2, 3], random_pmf(rng, 6).mass().to_vec()).unwrap();
            [draw(rng), draw(rng), draw(rng)]
        })
        .collect();
    over("total variation is a bounded metric and convex", triples, |[p, q, r]| {
        let (pq, qr, pr) = (total_variation(p, q)?, total_variation(q, r)?, total_variation(p, r)?);
        let lambda = 0.3;
        let mixed = total_variation(&p.mix(q, lambda)?, r)?;
        let ok = total_variation(p, p)? == 0.0
            && (pq - total_variation(q, p)?).abs() <= 1e-12
            && pr <= pq + qr + 1e-12
            && (0.0..=1.0).contains(&pq)
            && mixed <= lambda * pr + (1.0 - lambda) * qr + 1e-12;
        Ok((!ok).then(|| instance(&json!({"p": p, "q": q, "r": r}))))
    })
}

/// `(code, p0, first target, second target)` cases over the code battery.
fn code_cases(rng: &mut ChaCha8Rng) -> Vec<(CoordinationCode, Pmf, JointPmf, JointPmf)> {
    binary_code_battery()
        .into_iter()
        .map(|code| {
            let shape = code.joint_shape();
            let cells = shape.iter().product();
            let p0 = random_pmf(rng, 2);
            let p = JointPmf::new(shape.clone(), random_pmf(rng, cells).mass().to_vec()).unwrap();
            let q = JointPmf::new(shape, random_pmf(rng, cells).mass().to_vec()).unwrap();
            (code, p0, p, q)
        })
        .collect()
}

fn code_properties(rng: &mut ChaCha8Rng) -> Vec<CheckOutcome> {
    let cases = code_cases(rng);
    let describe = |c: &CoordinationCode, p0: &Pmf, p: &JointPmf, q: &JointPmf| {
        instance(&json!({"code": c, "p0": p0, "p": p, "q": q}))
    };
    vec![
        over("source marginal is preserved", cases.clone(), |(code, p0, _, _)| {
            let law = induced_distribution(code, p0)?;
            let bad = law.realizations.iter().any(|r| {
                let product: f64 = r.x.iter().map(|&s| p0.prob(s as usize)).product();
                (r.prob - product).abs() > 1e-12
            }) || (law.total_mass() - 1.0).abs() > 1e-12;
            Ok(bad.then(|| instance(&json!({"code": code, "p0": p0}))))
        }),
        over("achievability chain", cases.clone(), |(code, p0, p, q)| {
            let lhs = expected_tv_exact(code, p0, p)?;
            let rhs = expected_tv_exact(code, p0, q)? + total_variation(q, p)?;
            Ok((lhs > rhs + 1e-12).then(|| describe(code, p0, p, q)))
        }),
        over("Jensen step", cases.clone(), |(code, p0, p, q)| {
            let law = induced_distribution(code, p0)?;
            let expected = law.expected_type();
            let lhs = expected_tv_exact(code, p0, p)?;
            Ok((lhs + 1e-12 < total_variation(&expected, p)?).then(|| describe(code, p0, p, q)))
        }),
        over("expectation bound with TV_max = 1", cases, |(code, p0, p, q)| {
            let tv_law = induced_distribution(code, p0)?.tv_law(p)?;
            let mean: f64 = tv_law.iter().map(|(w, t)| w * t).sum();
            let bad = (0..=10).map(|k| k as f64 / 10.0).any(|t| {
                let tail: f64 = tv_law.iter().filter(|(_, v)| *v > t).map(|(w, _)| w).sum();
                mean > tail + t + 1e-12
            });
            Ok(bad.then(|| describe(code, p0, p, q)))
        }),
    ]
}

fn solver_properties(rng: &mut ChaCha8Rng) -> Vec<CheckOutcome> {
    let config = SolverConfig::default();
    let instances: Vec<(Pmf, CondPmf)> = (0..5)
        .map(|_| {
            let (nx, ny) = (rng.gen_range(2..=3), rng.gen_range(2..=3));
            (random_pmf(rng, nx), random_conditional(rng, nx, &[ny]))
        })
        .collect();
    let describe = |p0: &Pmf, q: &CondPmf| instance(&json!({"p0": p0, "target": q}));
    let binary: Vec<(Pmf, CondPmf)> = vec![(random_pmf(rng, 2), random_conditional(rng, 2, &[2]))];
    vec![
        over("solver endpoints", instances.clone(), |(p0, q)| {
            let info = mutual_information(&compose(p0, q)?, &[0], &[1])?;
            let at_zero = solve_two_node(p0, q, 0.0, &config)?;
            let star = delta_star(p0, q)?;
            let at_star = solve_two_node(p0, q, star, &config)?;
            let slack = total_variation(&compose(p0, &at_star.argmin)?, &compose(p0, q)?)? - star;
            let ok = (at_zero.r1 - info).abs() <= 1e-6 && at_star.r1 <= 1e-6 && slack <= 1e-10;
            Ok((!ok).then(|| describe(p0, q)))
        }),
        over("R(delta) is non-increasing and convex", instances, |(p0, q)| {
            let star = delta_star(p0, q)?;
            let values: Vec<f64> = (0..9)
                .map(|k| solve_two_node(p0, q, star * k as f64 / 8.0, &config).map(|p| p.r1))
                .collect::<Result<_>>()?;
            let tol = 2.0 * config.duality_gap_tol;
            let monotone = values.windows(2).all(|w| w[1] <= w[0] + tol);
            let convex = values.windows(3).all(|w| w[1] <= 0.5 * (w[0] + w[2]) + tol);
            Ok((!(monotone && convex)).then(|| describe(p0, q)))
        }),
        over("solver agrees with the grid oracle", binary, |(p0, q)| {
            let solved = solve_two_node(p0, q, 0.1, &config)?.r1;
            let grid = grid_min_mi(p0, q, 0.1, 1e-3)?.optimum;
            Ok(((solved - grid).abs() > 1e-3).then(|| describe(p0, q)))
        }),
    ]
}

fn construction_properties(rng: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let p0 = random_pmf(rng, 2);
    let q = random_conditional(rng, 2, &[2]);
    let target = compose(&p0, &q)?;
    let base = build_codebook_code(&p0, &q, 2, 0.8, None, rng.gen())?;
    let inputs: Vec<Vec<u8>> = (0..20).map(|_| (0..8).map(|_| rng.gen_range(0..2)).collect()).collect();
    let repeat = over("block_repeat keeps rates and averages block types", inputs, |x| {
        let code = block_repeat(&base, 4)?;
        let y = crate::code::apply_code(&code, x)?.y;
        let whole = joint_type(&[x, &y], &[2, 2])?;
        let mut blocks = joint_type(&[&x[..2], &y[..2]], &[2, 2])?;
        for b in 1..4 {
            blocks = blocks.concat(&joint_type(&[&x[2 * b..2 * b + 2], &y[2 * b..2 * b + 2]], &[2, 2])?)?;
        }
        let ok = code.rates() == base.rates() && whole == blocks;
        Ok((!ok).then(|| instance(&json!({"code": base, "x": x}))))
    });
    let rates = [0.0, 0.5, 1.0];
    let exhaustive = over("exhaustive optimizer attains its optimum", vec![(p0.clone(), target.clone())], |(p0, t)| {
        let mut last = f64::INFINITY;
        for r in rates {
            let report = exhaustive_best_code(p0, t, 2, r, None, crate::oracle::DEFAULT_CODE_GUARD)?;
            let Optimizer::Code(code) = &report.optimizer else {
                return Ok(Some("optimizer is not a code".into()));
            };
            let exact = expected_tv_exact(code, p0, t)?;
            if (exact - report.optimum).abs() > 1e-12 || report.optimum > last + 1e-15 {
                return Ok(Some(instance(&json!({"p0": p0, "target": t, "R1": r}))));
            }
            last = report.optimum;
        }
        Ok(None)
    });
    let scan = over("consistency scan raises no flags", vec![(p0, q)], |(p0, q)| {
        let options = ScanOptions { samples: 200, ..Default::default() };
        let report = theorem_consistency_scan(p0, q, &[1, 2], &[0.0, 0.1, 0.5, 1.0], u64::MAX, &options)?;
        Ok((report.flags > 0 || report.partial).then(|| instance(&json!({"p0": p0, "target": q}))))
    });
    Ok(vec![repeat, exhaustive, scan])
}

fn round_trip<T: Serialize + serde::de::DeserializeOwned + PartialEq>(value: &T) -> Result<bool> {
    let text = serde_json::to_string(value)?;
    Ok(&serde_json::from_str::<T>(&text)? == value)
}

fn json_properties(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let p0 = random_pmf(rng, 2);
    let cascade = random_conditional(rng, 2, &[2, 2]);
    let two_node = random_conditional(rng, 2, &[2]);
    let code = build_codebook_code(&p0, &cascade, 2, 1.0, Some(0.5), rng.gen())?;
    let config = SolverConfig { scalarization_weights: vec![0.0, 0.5, 1.0], ..Default::default() };
    let frontier = solve_cascade(&p0, &cascade, 0.05, &config)?;
    let report = grid_min_mi(&p0, &two_node, 0.1, 0.05)?;
    let ok = round_trip(&code)? && round_trip(&frontier)? && round_trip(&report)? && round_trip(&two_node)?;
    Ok(outcome(
        "JSON artifacts round-trip",
        4,
        (!ok).then(|| instance(&json!({"p0": p0, "cascade": cascade, "two_node": two_node}))),
    ))
}

/// Every property on instances drawn from `seed`.
pub fn run_battery(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![expected_type_identity(&mut rng), tv_metric(&mut rng)];
    out.extend(code_properties(&mut rng));
    out.extend(solver_properties(&mut rng));
    out.extend(construction_properties(&mut rng)?);
    out.push(json_properties(&mut rng)?);
    Ok(out)
}

/// Properties of one user-supplied two-node or cascade instance.
pub fn instance_battery(p0: &Pmf, target: &CondPmf, config: &SolverConfig) -> Result<Vec<CheckOutcome>> {
    let joint = compose(p0, target)?;
    let describe = || instance(&json!({"p0": p0, "target": target}));
    let star = delta_star(p0, target)?;
    let endpoints = if target.output_shape().len() == 1 {
        let info = mutual_information(&joint, &[0], &[1])?;
        let at_zero = solve_two_node(p0, target, 0.0, config)?.r1;
        let at_star = solve_two_node(p0, target, star, config)?.r1;
        (at_zero - info).abs() <= 1e-6 && at_star <= 1e-6
    } else {
        let info = mutual_information(&joint, &[0], &[1, 2])?;
        let at_zero = solve_cascade(p0, target, 0.0, config)?;
        let at_star = solve_cascade(p0, target, star, config)?;
        at_zero.points.iter().all(|p| (p.r1 - info).abs() <= 1e-6)
            && at_star.points.iter().all(|p| p.r1 <= 1e-6 && p.r2.unwrap_or(0.0) <= 1e-6)
    };
    Ok(vec![outcome("solver endpoints on the given instance", 1, (!endpoints).then(describe))])
}
