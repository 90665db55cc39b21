//! Expected type of a random sequence versus its per-coordinate marginals.
//!
//! The exact routines are generic over any field-like number type so they can
//! run over rationals; the float routine works on [`Pmf`]s.

use num_traits::Num;

use super::pmf::Pmf;
use crate::error::{CoordError, Result};

/// Arithmetic mean of per-coordinate marginals.
pub fn expected_type(per_coordinate_marginals: &[Pmf]) -> Result<Pmf> {
    let first = per_coordinate_marginals
        .first()
        .ok_or_else(|| CoordError::InvalidArgument("no coordinate marginals".into()))?;
    let size = first.alphabet_size();
    let mut mean = vec![0.0; size];
    for m in per_coordinate_marginals {
        if m.alphabet_size() != size {
            return Err(CoordError::ShapeMismatch { left: vec![size], right: vec![m.alphabet_size()] });
        }
        for (acc, v) in mean.iter_mut().zip(m.mass()) {
            *acc += v;
        }
    }
    let k = per_coordinate_marginals.len() as f64;
    mean.iter_mut().for_each(|v| *v /= k);
    Pmf::new(mean)
}

fn count_of<T: Num + Clone>(k: usize) -> T {
    (0..k).fold(T::zero(), |acc, _| acc + T::one())
}

/// Decode sequence index `idx` (first symbol most significant) into `out`.
pub(crate) fn decode_index(mut idx: usize, alphabet: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % alphabet;
        idx /= alphabet;
    }
}

fn check_sequence_law<T>(law: &[T], n: usize, alphabet: usize) -> Result<()> {
    let expected =
        alphabet.checked_pow(n as u32).ok_or_else(|| CoordError::InvalidArgument("alphabet^n overflows".into()))?;
    if n == 0 || alphabet == 0 || law.len() != expected {
        return Err(CoordError::InvalidArgument(format!(
            "sequence law has {} entries, expected {alphabet}^{n}",
            law.len()
        )));
    }
    Ok(())
}

/// `E{P_{x^n}(a)}` by enumerating every sequence: `sum p(x^n) * N(a | x^n) / n`.
pub fn brute_force_expected_type<T: Num + Clone>(law: &[T], n: usize, alphabet: usize) -> Result<Vec<T>> {
    check_sequence_law(law, n, alphabet)?;
    let n_t: T = count_of(n);
    let mut out = vec![T::zero(); alphabet];
    let mut seq = vec![0usize; n];
    for (idx, p) in law.iter().enumerate() {
        decode_index(idx, alphabet, &mut seq);
        for (a, slot) in out.iter_mut().enumerate() {
            let hits = seq.iter().filter(|&&s| s == a).count();
            if hits > 0 {
                *slot = slot.clone() + p.clone() * count_of::<T>(hits) / n_t.clone();
            }
        }
    }
    Ok(out)
}

/// Marginal law of each coordinate `X_k`.
pub fn coordinate_marginals<T: Num + Clone>(law: &[T], n: usize, alphabet: usize) -> Result<Vec<Vec<T>>> {
    check_sequence_law(law, n, alphabet)?;
    let mut out = vec![vec![T::zero(); alphabet]; n];
    let mut seq = vec![0usize; n];
    for (idx, p) in law.iter().enumerate() {
        decode_index(idx, alphabet, &mut seq);
        for (k, &s) in seq.iter().enumerate() {
            out[k][s] = out[k][s].clone() + p.clone();
        }
    }
    Ok(out)
}

/// `(1/n) sum_k p_{X_k}`.
pub fn averaged_marginals<T: Num + Clone>(law: &[T], n: usize, alphabet: usize) -> Result<Vec<T>> {
    let marginals = coordinate_marginals(law, n, alphabet)?;
    let n_t: T = count_of(n);
    Ok((0..alphabet).map(|a| marginals.iter().fold(T::zero(), |acc, m| acc + m[a].clone()) / n_t.clone()).collect())
}
