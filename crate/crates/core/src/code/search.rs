//! Per-block encoding, including the minimum-distance search behind
//! nearest-type encoders.
//!
//! The plain path scans every message. When the target puts all of each
//! source symbol's mass on a single action, the distance of a candidate
//! depends only on how many positions of each source symbol it misses; the
//! indexed path walks those miss counts in order of distance and looks the
//! candidate words up in a hash index, stopping once no unvisited word can
//! tie the best distance. Both paths return the same message.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use super::code::{CoordinationCode, Encoder};
use super::codebook::pack;
use crate::prob::Symbol;

/// Smallest codebook for which building the index pays off.
const INDEX_MIN_MESSAGES: usize = 4096;
/// Largest number of miss-count vectors the indexed path will order.
const MAX_MISS_VECTORS: usize = 100_000;
/// Slack on distance comparisons between the closed-form bound and the
/// value recomputed from counts.
const BOUND_SLACK: f64 = 1e-12;

/// Half the l1 distance between the normalized `counts` and `target`.
pub(crate) fn counts_tv(counts: &[u32], n: usize, target: &[f64]) -> f64 {
    let n = n as f64;
    0.5 * counts.iter().zip(target).map(|(&c, &p)| (c as f64 / n - p).abs()).sum::<f64>()
}

/// splitmix64 finalizer; codeword keys differ mostly in their high bits.
#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ b as u64;
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = v;
    }
}

struct Index {
    /// First message holding each packed word.
    first: HashMap<u64, u32, BuildHasherDefault<KeyHasher>>,
    bits: u32,
    /// The single action of each source symbol, if it has mass.
    action: Vec<Option<Symbol>>,
    source: Vec<f64>,
}

pub(crate) struct Searcher<'a> {
    code: &'a CoordinationCode,
    index: Option<Index>,
}

struct Scratch {
    y: Vec<Symbol>,
    z: Vec<Symbol>,
    counts: Vec<u32>,
}

impl<'a> Searcher<'a> {
    pub fn plain(code: &'a CoordinationCode) -> Self {
        Self { code, index: None }
    }

    /// Builds the hash index when the code qualifies and is large enough
    /// for it to matter.
    pub fn indexed(code: &'a CoordinationCode) -> Self {
        let index = match code.encoder() {
            Encoder::NearestType(target) if !code.is_cascade() && code.y_book().len() >= INDEX_MIN_MESSAGES => {
                code.y_book().keys().and_then(|(keys, bits)| {
                    let ny = target.shape()[1];
                    let rows: Vec<&[f64]> = target.mass().chunks(ny).collect();
                    if rows.iter().any(|r| r.iter().filter(|&&p| p > 0.0).count() > 1) {
                        return None;
                    }
                    let action = rows.iter().map(|r| r.iter().position(|&p| p > 0.0).map(|y| y as Symbol)).collect();
                    let source = rows.iter().map(|r| r.iter().sum()).collect();
                    let mut first = HashMap::with_capacity_and_hasher(keys.len(), Default::default());
                    for (i, &k) in keys.iter().enumerate() {
                        first.entry(k).or_insert(i as u32);
                    }
                    Some(Index { first, bits, action, source })
                })
            }
            _ => None,
        };
        Self { code, index }
    }

    fn scratch(&self) -> Scratch {
        let n = self.code.base_blocklength();
        let cells = self.code.joint_shape().iter().product();
        Scratch { y: vec![0; n], z: vec![0; n], counts: vec![0; cells] }
    }

    pub fn encode_block(&self, x: &[Symbol]) -> u32 {
        match self.code.encoder() {
            Encoder::Table(table) => {
                let a = self.code.x_alphabet();
                table[x.iter().fold(0usize, |acc, &s| acc * a + s as usize)]
            }
            Encoder::NearestType(target) => {
                let mut scratch = self.scratch();
                self.index
                    .as_ref()
                    .and_then(|index| self.nearest_indexed(index, x, target.mass(), &mut scratch))
                    .unwrap_or_else(|| self.nearest_scan(x, target.mass(), &mut scratch))
            }
        }
    }

    /// Distance between the joint type of `x` with message `i`'s actions and
    /// `target`.
    fn candidate_tv(&self, x: &[Symbol], i: usize, target: &[f64], s: &mut Scratch) -> f64 {
        let code = self.code;
        let shape = code.joint_shape();
        code.y_book().write_word(i, &mut s.y);
        s.counts.iter_mut().for_each(|c| *c = 0);
        match (code.z_book(), code.recoder()) {
            (Some(book), Some(recoder)) => {
                book.write_word(recoder[i] as usize, &mut s.z);
                for ((&a, &b), &c) in x.iter().zip(&s.y).zip(&s.z) {
                    s.counts[(a as usize * shape[1] + b as usize) * shape[2] + c as usize] += 1;
                }
            }
            _ => {
                for (&a, &b) in x.iter().zip(&s.y) {
                    s.counts[a as usize * shape[1] + b as usize] += 1;
                }
            }
        }
        counts_tv(&s.counts, x.len(), target)
    }

    fn nearest_scan(&self, x: &[Symbol], target: &[f64], s: &mut Scratch) -> u32 {
        let mut best = (f64::INFINITY, 0u32);
        for i in 0..self.code.y_book().len() {
            let tv = self.candidate_tv(x, i, target, s);
            if tv < best.0 {
                best = (tv, i as u32);
            }
        }
        best.1
    }

    fn nearest_indexed(&self, index: &Index, x: &[Symbol], target: &[f64], s: &mut Scratch) -> Option<u32> {
        let n = x.len();
        let ny = self.code.y_book().alphabet();
        let nx = index.action.len();
        let mut positions: Vec<Vec<usize>> = vec![Vec::new(); nx];
        let mut word = vec![0 as Symbol; n];
        for (t, &a) in x.iter().enumerate() {
            word[t] = index.action[a as usize]?;
            positions[a as usize].push(t);
        }
        let symbols: Vec<usize> = (0..nx).filter(|&a| !positions[a].is_empty()).collect();
        let vector_count = symbols
            .iter()
            .try_fold(1usize, |acc, &a| acc.checked_mul(positions[a].len() + 1))
            .filter(|&c| c <= MAX_MISS_VECTORS)?;

        // every miss-count vector with its closed-form distance
        let mut vectors: Vec<(f64, Vec<usize>)> = Vec::with_capacity(vector_count);
        let mut misses = vec![0usize; symbols.len()];
        loop {
            let mut sum = 0.0;
            let mut missed = 0;
            for (a, at) in positions.iter().enumerate().take(nx) {
                let c = at.len();
                let d = symbols.iter().position(|&b| b == a).map_or(0, |k| misses[k]);
                missed += d;
                sum += ((c - d) as f64 / n as f64 - index.source[a]).abs();
            }
            vectors.push((0.5 * (missed as f64 / n as f64 + sum), misses.clone()));
            let mut k = 0;
            while k < symbols.len() {
                misses[k] += 1;
                if misses[k] <= positions[symbols[k]].len() {
                    break;
                }
                misses[k] = 0;
                k += 1;
            }
            if k == symbols.len() {
                break;
            }
        }
        vectors.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

        let base = pack(&word, index.bits);
        let budget = self.code.y_book().len() as f64 / 2.0;
        let mut spent = 0.0;
        let mut best = (f64::INFINITY, u32::MAX);
        for (bound, misses) in &vectors {
            if *bound > best.0 + BOUND_SLACK {
                break;
            }
            let total: usize = misses.iter().sum();
            let words = symbols.iter().zip(misses).map(|(&a, &d)| binomial(positions[a].len(), d)).product::<f64>()
                * ((ny - 1) as f64).powi(total as i32);
            spent += words;
            if spent > budget {
                return None;
            }
            let groups: Vec<(&[usize], usize, Symbol)> = symbols
                .iter()
                .zip(misses)
                .filter(|(_, &d)| d > 0)
                .map(|(&a, &d)| (positions[a].as_slice(), d, index.action[a].unwrap_or(0)))
                .collect();
            let mut visit = |key: u64| {
                if let Some(&i) = index.first.get(&key) {
                    let tv = self.candidate_tv(x, i as usize, target, s);
                    if tv < best.0 || (tv == best.0 && i < best.1) {
                        best = (tv, i);
                    }
                }
            };
            flip(&groups, 0, 0, groups.first().map_or(0, |g| g.1), base, index.bits, ny, &mut visit);
        }
        (best.1 != u32::MAX).then_some(best.1)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Calls `visit` with every key obtained from `key` by changing exactly
/// `groups[g].1` positions of each group to a symbol other than the group's
/// action.
#[allow(clippy::too_many_arguments)]
fn flip(
    groups: &[(&[usize], usize, Symbol)],
    g: usize,
    start: usize,
    left: usize,
    key: u64,
    bits: u32,
    alphabet: usize,
    visit: &mut impl FnMut(u64),
) {
    if g == groups.len() {
        visit(key);
        return;
    }
    let (positions, _, action) = groups[g];
    if left == 0 {
        let next = groups.get(g + 1).map_or(0, |h| h.1);
        flip(groups, g + 1, 0, next, key, bits, alphabet, visit);
        return;
    }
    for (p, &at) in positions.iter().enumerate().take(positions.len() - left + 1).skip(start) {
        let shift = at as u32 * bits;
        for s in (0..alphabet as u64).filter(|&s| s != action as u64) {
            let changed = key ^ ((action as u64 ^ s) << shift);
            flip(groups, g, p + 1, left - 1, changed, bits, alphabet, visit);
        }
    }
}
