use std::time::Instant;

use rayon::prelude::*;

use super::report::{Instance, Optimizer, OracleReport};
use crate::code::{counts_tv, message_count, Codebook, CoordinationCode, Encoder, ENUMERATION_GUARD};
use crate::error::{CoordError, Result};
use crate::prob::{JointPmf, Pmf, Symbol};

pub const DEFAULT_CODE_GUARD: u64 = 10_000_000;
/// Largest `inputs x candidate words` distance table.
const TV_TABLE_CAP: usize = 1 << 24;

/// `C(kinds + k - 1, k)`, the number of size-`k` multisets over `kinds`
/// items, or `None` on overflow.
pub fn multiset_count(kinds: u64, k: u64) -> Option<u64> {
    if kinds == 0 {
        return Some(u64::from(k == 0));
    }
    let mut count: u128 = 1;
    for i in 1..=k as u128 {
        count = count.checked_mul(kinds as u128 - 1 + i)? / i;
        if count > u64::MAX as u128 {
            return None;
        }
    }
    Some(count as u64)
}

/// Size of the space [`exhaustive_best_code`] enumerates.
///
/// Two-node codes are enumerated as sorted codeword lists, giving
/// `C(|Y|^n + m1 - 1, m1)`. Cascade codes are a sorted list of `m2`
/// second-hop words followed by a sorted list of `m1` pairs
/// `(first-hop word, second-hop message)`, giving
/// `C(|Z|^n + m2 - 1, m2) C(|Y|^n m2 + m1 - 1, m1)`.
pub fn code_search_space(
    y_alphabet: usize,
    z_alphabet: Option<usize>,
    n: usize,
    m1: usize,
    m2: Option<usize>,
) -> Option<u64> {
    let words = |a: usize| (a as u64).checked_pow(n as u32);
    match (z_alphabet, m2) {
        (Some(nz), Some(m2)) => {
            let books = multiset_count(words(nz)?, m2 as u64)?;
            let pairs = multiset_count(words(y_alphabet)?.checked_mul(m2 as u64)?, m1 as u64)?;
            books.checked_mul(pairs)
        }
        _ => multiset_count(words(y_alphabet)?, m1 as u64),
    }
}

fn sequences(alphabet: usize, n: usize) -> Vec<Vec<Symbol>> {
    let count = alphabet.pow(n as u32);
    (0..count)
        .map(|mut idx| {
            let mut s = vec![0 as Symbol; n];
            for slot in s.iter_mut().rev() {
                *slot = (idx % alphabet) as Symbol;
                idx /= alphabet;
            }
            s
        })
        .collect()
}

/// Distances from every input sequence's joint type with every candidate
/// action word (or word pair) to the target.
pub(crate) struct Table {
    pub x_alphabet: usize,
    pub prob: Vec<f64>,
    pub y_words: Vec<Vec<Symbol>>,
    pub z_words: Option<Vec<Vec<Symbol>>>,
    /// `tv[w]` over inputs, with `w = y` or `w = y |Z|^n + z`.
    pub tv: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(p0: &Pmf, target: &JointPmf, n: usize) -> Result<Self> {
        let shape = target.shape().to_vec();
        if !(2..=3).contains(&shape.len()) || shape[0] != p0.alphabet_size() {
            return Err(CoordError::ShapeMismatch { left: vec![p0.alphabet_size()], right: shape });
        }
        if n == 0 {
            return Err(CoordError::InvalidArgument("blocklength must be at least 1".into()));
        }
        let words = |a: usize| (a as u64).checked_pow(n as u32).map_or(u128::MAX, u128::from);
        let inputs = words(shape[0]);
        if inputs > ENUMERATION_GUARD as u128 {
            return Err(CoordError::GuardExceeded { size: inputs, limit: ENUMERATION_GUARD as u128 });
        }
        let candidates = shape[1..].iter().map(|&a| words(a)).fold(1u128, u128::saturating_mul);
        let cells = inputs.saturating_mul(candidates);
        if cells > TV_TABLE_CAP as u128 {
            return Err(CoordError::TableCap { size: cells, cap: TV_TABLE_CAP as u128 });
        }
        let xs = sequences(shape[0], n);
        let prob = xs.iter().map(|x| x.iter().map(|&s| p0.prob(s as usize)).product()).collect();
        let y_words = sequences(shape[1], n);
        let z_words = shape.get(2).map(|&nz| sequences(nz, n));
        let mut tv = Vec::new();
        let mut counts = vec![0u32; target.mass().len()];
        let mut push = |cells: &dyn Fn(&[Symbol], usize) -> usize| {
            tv.push(
                xs.iter()
                    .map(|x| {
                        counts.iter_mut().for_each(|c| *c = 0);
                        for t in 0..n {
                            counts[cells(x, t)] += 1;
                        }
                        counts_tv(&counts, n, target.mass())
                    })
                    .collect(),
            );
        };
        for y in &y_words {
            match &z_words {
                None => push(&|x, t| x[t] as usize * shape[1] + y[t] as usize),
                Some(zs) => {
                    for z in zs {
                        push(&|x, t| (x[t] as usize * shape[1] + y[t] as usize) * shape[2] + z[t] as usize);
                    }
                }
            }
        }
        Ok(Self { x_alphabet: shape[0], prob, y_words, z_words, tv })
    }

    pub fn y_word_count(&self) -> usize {
        self.y_words.len()
    }

    /// Best two-node codebook of `m` words: `(E{TV}, sorted word indices)`.
    pub fn best_two_node(&self, m: usize) -> (f64, Vec<usize>) {
        let cost: Vec<&[f64]> = self.tv.iter().map(|v| v.as_slice()).collect();
        best_multiset(&cost, &self.prob, m)
    }

    /// Best cascade code: `(E{TV}, sorted z words, sorted (y, z message) pairs)`.
    pub fn best_cascade(&self, m1: usize, m2: usize) -> (f64, Vec<usize>, Vec<(usize, usize)>) {
        let wz = self.z_words.as_ref().map_or(1, |z| z.len());
        let mut best = (f64::INFINITY, Vec::new(), Vec::new());
        for_each_multiset(wz, m2, &mut |book| {
            let cost: Vec<&[f64]> = (0..self.y_words.len())
                .flat_map(|y| book.iter().map(move |&z| y * wz + z))
                .map(|w| self.tv[w].as_slice())
                .collect();
            let (value, items) = best_multiset(&cost, &self.prob, m1);
            if value < best.0 {
                let pairs = items.iter().map(|&i| (i / m2, i % m2)).collect();
                best = (value, book.to_vec(), pairs);
            }
        });
        best
    }
}

/// Visits every non-decreasing index sequence of length `k` below `kinds`,
/// in lexicographic order.
fn for_each_multiset(kinds: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    let mut items = vec![0usize; k];
    loop {
        visit(&items);
        let Some(pos) = (0..k).rev().find(|&i| items[i] + 1 < kinds) else {
            return;
        };
        let next = items[pos] + 1;
        items[pos..].iter_mut().for_each(|v| *v = next);
    }
}

struct Walk<'a> {
    cost: &'a [&'a [f64]],
    prob: &'a [f64],
    m: usize,
    chosen: Vec<usize>,
    /// `mins[d]` is the per-input minimum over the first `d + 1` choices.
    mins: Vec<Vec<f64>>,
    best: (f64, Vec<usize>),
}

impl Walk<'_> {
    fn descend(&mut self, start: usize) {
        let depth = self.chosen.len();
        if depth == self.m {
            let value: f64 = self.prob.iter().zip(&self.mins[depth - 1]).map(|(p, v)| p * v).sum();
            if value < self.best.0 {
                self.best = (value, self.chosen.clone());
            }
            return;
        }
        for item in start..self.cost.len() {
            let (done, rest) = self.mins.split_at_mut(depth);
            for ((out, &prev), &c) in rest[0].iter_mut().zip(&done[depth - 1]).zip(self.cost[item]) {
                *out = prev.min(c);
            }
            self.chosen.push(item);
            self.descend(item);
            self.chosen.pop();
        }
    }
}

/// Size-`m` multiset of items minimizing `sum_i prob[i] min_{w in set} cost[w][i]`,
/// lexicographically first among ties. Partitions by first item run in
/// parallel and are reduced in order.
fn best_multiset(cost: &[&[f64]], prob: &[f64], m: usize) -> (f64, Vec<usize>) {
    let partitions: Vec<(f64, Vec<usize>)> = (0..cost.len())
        .into_par_iter()
        .map(|first| {
            let mut mins = vec![vec![0.0; prob.len()]; m];
            mins[0].copy_from_slice(cost[first]);
            let mut walk = Walk { cost, prob, m, chosen: vec![first], mins, best: (f64::INFINITY, Vec::new()) };
            walk.descend(first);
            walk.best
        })
        .collect();
    partitions.into_iter().fold((f64::INFINITY, Vec::new()), |acc, p| if p.0 < acc.0 { p } else { acc })
}

/// Per-input argmin over messages, lowest message on ties.
fn encoder_table(table: &Table, words: &[usize]) -> Vec<u32> {
    (0..table.prob.len())
        .map(|x| {
            let mut best = (f64::INFINITY, 0u32);
            for (i, &w) in words.iter().enumerate() {
                if table.tv[w][x] < best.0 {
                    best = (table.tv[w][x], i as u32);
                }
            }
            best.1
        })
        .collect()
}

/// Exact minimum of `E{TV(type, target)}` over all deterministic codes with
/// `2^{n R1}` (and `2^{n R2}`) messages.
///
/// Only decoder tables are enumerated: for fixed tables the best encoder
/// sends each input to the message minimizing its own distance, because
/// the expectation separates over inputs. The optimizer is the
/// lexicographically first optimal table with that encoder.
pub fn exhaustive_best_code(
    p0: &Pmf,
    target: &JointPmf,
    n: usize,
    r1: f64,
    r2: Option<f64>,
    guard: u64,
) -> Result<OracleReport> {
    let start = Instant::now();
    let shape = target.shape().to_vec();
    let cascade = shape.len() == 3;
    if cascade != r2.is_some() {
        return Err(CoordError::InvalidArgument(format!(
            "target with {} axes needs {} rate(s)",
            shape.len(),
            shape.len() - 1
        )));
    }
    let m1 = message_count(n, r1)?;
    let m2 = r2.map(|r| message_count(n, r)).transpose()?;
    let size = code_search_space(shape[1], shape.get(2).copied(), n, m1, m2).unwrap_or(u64::MAX);
    if size > guard {
        return Err(CoordError::GuardExceeded { size: size as u128, limit: guard as u128 });
    }
    let table = Table::new(p0, target, n)?;
    let (optimum, code) = match m2 {
        None => {
            let (value, words) = table.best_two_node(m1);
            let book: Vec<Vec<Symbol>> = words.iter().map(|&w| table.y_words[w].clone()).collect();
            let encoder = Encoder::Table(encoder_table(&table, &words));
            let book = Codebook::from_words(&book, n, shape[1])?;
            (value, CoordinationCode::two_node(n, r1, table.x_alphabet, encoder, book)?)
        }
        Some(m2) => {
            let (value, z_book, pairs) = table.best_cascade(m1, m2);
            let wz = table.z_words.as_ref().map_or(1, |z| z.len());
            let z_words = table.z_words.as_ref().expect("cascade table has second-hop words");
            let cells: Vec<usize> = pairs.iter().map(|&(y, s)| y * wz + z_book[s]).collect();
            let y_book: Vec<Vec<Symbol>> = pairs.iter().map(|&(y, _)| table.y_words[y].clone()).collect();
            let z_book: Vec<Vec<Symbol>> = z_book.iter().map(|&z| z_words[z].clone()).collect();
            let recoder = pairs.iter().map(|&(_, s)| s as u32).collect();
            let encoder = Encoder::Table(encoder_table(&table, &cells));
            let code = CoordinationCode::cascade(
                n,
                r1,
                r2.unwrap_or(0.0),
                table.x_alphabet,
                encoder,
                recoder,
                Codebook::from_words(&y_book, n, shape[1])?,
                Codebook::from_words(&z_book, n, shape[2])?,
            )?;
            (value, code)
        }
    };
    Ok(OracleReport {
        instance: Instance::Exhaustive { p0: p0.clone(), target: target.clone(), n, r1, r2, guard },
        optimum,
        optimizer: Optimizer::Code(code),
        search_space_size: size,
        evaluated: size,
        discretization_bound: None,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
