use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::code::{run_blocks, sequence_count, Actions, CoordinationCode};
use super::search::{counts_tv, Searcher};
use crate::error::{CoordError, Result};
use crate::prob::{joint_type, JointPmf, Pmf, Symbol, TypeRecord};

/// Largest number of source sequences the exact routines enumerate.
pub const ENUMERATION_GUARD: usize = 4096;
/// Samples drawn from one random stream; stream `c` serves chunk `c`.
const CHUNK: usize = 256;
pub const QUANTILE_LEVELS: [f64; 7] = [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0];

/// One source sequence, its probability and the actions it produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub x: Vec<Symbol>,
    pub actions: Actions,
    pub prob: f64,
}

/// Law of `(X^n, Y^n[, Z^n])` under an i.i.d. source driving a code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InducedDistribution {
    pub shape: Vec<usize>,
    pub realizations: Vec<Realization>,
}

impl InducedDistribution {
    pub fn total_mass(&self) -> f64 {
        self.realizations.iter().map(|r| r.prob).sum()
    }

    pub fn joint_type(&self, r: &Realization) -> TypeRecord {
        let mut seqs: Vec<&[Symbol]> = vec![&r.x, &r.actions.y];
        if let Some(z) = &r.actions.z {
            seqs.push(z);
        }
        joint_type(&seqs, &self.shape).expect("realizations match the code's alphabets")
    }

    /// `E{P_{x^n, y^n, z^n}}` by enumeration.
    pub fn expected_type(&self) -> JointPmf {
        let mut mass = vec![0.0; self.shape.iter().product()];
        for r in &self.realizations {
            let t = self.joint_type(r);
            let n = t.blocklength() as f64;
            for (m, &c) in mass.iter_mut().zip(t.counts()) {
                *m += r.prob * c as f64 / n;
            }
        }
        JointPmf::from_parts_unchecked(self.shape.clone(), mass)
    }

    /// `(probability, TV(type, target))` of every realization.
    pub fn tv_law(&self, target: &JointPmf) -> Result<Vec<(f64, f64)>> {
        if target.shape() != self.shape.as_slice() {
            return Err(CoordError::ShapeMismatch { left: target.shape().to_vec(), right: self.shape.clone() });
        }
        Ok(self
            .realizations
            .iter()
            .map(|r| {
                let t = self.joint_type(r);
                (r.prob, counts_tv(t.counts(), t.blocklength(), target.mass()))
            })
            .collect())
    }
}

fn check_source(code: &CoordinationCode, p0: &Pmf) -> Result<()> {
    if p0.alphabet_size() != code.x_alphabet() {
        return Err(CoordError::ShapeMismatch { left: vec![p0.alphabet_size()], right: vec![code.x_alphabet()] });
    }
    Ok(())
}

pub fn induced_distribution(code: &CoordinationCode, p0: &Pmf) -> Result<InducedDistribution> {
    check_source(code, p0)?;
    let len = code.blocklength();
    let a = code.x_alphabet();
    let count = sequence_count(a, len).filter(|&c| c <= ENUMERATION_GUARD).ok_or(CoordError::GuardExceeded {
        size: (a as f64).powi(len as i32).min(u128::MAX as f64) as u128,
        limit: ENUMERATION_GUARD as u128,
    })?;
    let searcher = Searcher::plain(code);
    let realizations = (0..count)
        .map(|idx| {
            let mut x = vec![0 as Symbol; len];
            let mut rest = idx;
            for slot in x.iter_mut().rev() {
                *slot = (rest % a) as Symbol;
                rest /= a;
            }
            let prob = x.iter().map(|&s| p0.prob(s as usize)).product();
            let actions = run_blocks(code, &searcher, &x);
            Realization { x, actions, prob }
        })
        .collect();
    Ok(InducedDistribution { shape: code.joint_shape(), realizations })
}

/// `E{TV(P_{x^n,y^n,z^n}, target)}` by enumeration.
pub fn expected_tv_exact(code: &CoordinationCode, p0: &Pmf, target: &JointPmf) -> Result<f64> {
    let law = induced_distribution(code, p0)?.tv_law(target)?;
    Ok(law.iter().map(|(p, tv)| p * tv).sum())
}

/// Quantile of the per-sample distances at `level` (nearest rank).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub level: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub sample_count: usize,
    pub mean_tv: f64,
    pub standard_error: f64,
    pub quantiles: Vec<Quantile>,
    pub seed: u64,
}

impl SimReport {
    pub fn from_samples(values: &[f64], seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(CoordError::InvalidArgument("no samples".into()));
        }
        let n = values.len();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (mean, sd) = if sorted[0] == sorted[n - 1] {
            (sorted[0], 0.0)
        } else {
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (mean, var.sqrt())
        };
        let quantiles = QUANTILE_LEVELS
            .iter()
            .map(|&level| {
                let rank = ((level * n as f64).ceil() as usize).clamp(1, n);
                Quantile { level, value: sorted[rank - 1] }
            })
            .collect();
        Ok(Self { sample_count: n, mean_tv: mean, standard_error: sd / (n as f64).sqrt(), quantiles, seed })
    }

    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles.iter().find(|q| q.level == level).map(|q| q.value)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5).expect("median is a reported level")
    }
}

/// Sample mean of `TV(type, target)` over i.i.d. source sequences.
///
/// Sample `s` comes from stream `s / 256` of a ChaCha8 generator seeded with
/// `seed`, so the report does not depend on how many threads run.
pub fn expected_tv_monte_carlo(
    code: &CoordinationCode,
    p0: &Pmf,
    target: &JointPmf,
    samples: usize,
    seed: u64,
) -> Result<SimReport> {
    check_source(code, p0)?;
    if samples == 0 {
        return Err(CoordError::InvalidArgument("samples must be at least 1".into()));
    }
    if target.shape() != code.joint_shape().as_slice() {
        return Err(CoordError::ShapeMismatch { left: target.shape().to_vec(), right: code.joint_shape() });
    }
    let law = WeightedIndex::new(p0.mass()).map_err(|e| CoordError::InvalidPmf(e.to_string()))?;
    let searcher = Searcher::indexed(code);
    let shape = code.joint_shape();
    let len = code.blocklength();
    let chunks = samples.div_ceil(CHUNK);
    let values: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut x = vec![0 as Symbol; len];
            let mut counts = vec![0u32; shape.iter().product()];
            let mut out = Vec::with_capacity(CHUNK);
            for _ in (c * CHUNK)..((c + 1) * CHUNK).min(samples) {
                counts.iter_mut().for_each(|v| *v = 0);
                x.iter_mut().for_each(|s| *s = law.sample(&mut rng) as Symbol);
                let actions = run_blocks(code, &searcher, &x);
                for t in 0..len {
                    let mut cell = x[t] as usize * shape[1] + actions.y[t] as usize;
                    if let Some(z) = &actions.z {
                        cell = cell * shape[2] + z[t] as usize;
                    }
                    counts[cell] += 1;
                }
                out.push(counts_tv(&counts, len, target.mass()));
            }
            out
        })
        .collect();
    SimReport::from_samples(&values.concat(), seed)
}
