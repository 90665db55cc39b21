use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::code::{message_count, CoordinationCode, Encoder};
use super::codebook::Codebook;
use super::search::counts_tv;
use crate::error::{CoordError, Result};
use crate::prob::{compose, CondPmf, Pmf};

/// Default bound on codewords per decoder table, and on recoder search
/// pairs.
pub const DEFAULT_TABLE_CAP: usize = 1 << 26;

/// Random-codebook code with nearest-type encoding; see
/// [`build_codebook_code_capped`].
pub fn build_codebook_code(
    p0: &Pmf,
    q_target: &CondPmf,
    n: usize,
    r1: f64,
    r2: Option<f64>,
    seed: u64,
) -> Result<CoordinationCode> {
    build_codebook_code_capped(p0, q_target, n, r1, r2, seed, DEFAULT_TABLE_CAP)
}

/// Codewords are drawn i.i.d. from the action marginals of
/// `p0 * q_target`, first-hop words before second-hop words, from one
/// ChaCha8 stream seeded with `seed`. The encoder picks the message whose
/// actions give the joint type closest to `p0 * q_target`; in a cascade the
/// recoder first maps each first-hop word to the second-hop word whose
/// `(Y, Z)` type is closest to the target's `(Y, Z)` marginal.
pub fn build_codebook_code_capped(
    p0: &Pmf,
    q_target: &CondPmf,
    n: usize,
    r1: f64,
    r2: Option<f64>,
    seed: u64,
    cap: usize,
) -> Result<CoordinationCode> {
    let joint = compose(p0, q_target)?;
    if n == 0 {
        return Err(CoordError::InvalidArgument("blocklength must be at least 1".into()));
    }
    let capped =
        |m: usize| if m > cap { Err(CoordError::TableCap { size: m as u128, cap: cap as u128 }) } else { Ok(m) };
    let m1 = capped(message_count(n, r1)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y_marginal = joint.marginal(&[1])?;
    let y_book = Codebook::random(m1, n, y_marginal.mass(), &mut rng)?;
    let encoder = Encoder::NearestType(joint.clone());
    match (q_target.output_shape(), r2) {
        ([_], None) => CoordinationCode::two_node(n, r1, p0.alphabet_size(), encoder, y_book),
        ([ny, nz], Some(r2)) => {
            let m2 = capped(message_count(n, r2)?)?;
            capped(m1.saturating_mul(m2))?;
            let z_book = Codebook::random(m2, n, joint.marginal(&[2])?.mass(), &mut rng)?;
            let yz = joint.marginal(&[1, 2])?;
            let mut counts = vec![0u32; ny * nz];
            let (mut y, mut z) = (vec![0; n], vec![0; n]);
            let recoder = (0..m1)
                .map(|i| {
                    y_book.write_word(i, &mut y);
                    let mut best = (f64::INFINITY, 0u32);
                    for j in 0..m2 {
                        z_book.write_word(j, &mut z);
                        counts.iter_mut().for_each(|c| *c = 0);
                        for t in 0..n {
                            counts[y[t] as usize * nz + z[t] as usize] += 1;
                        }
                        let tv = counts_tv(&counts, n, yz.mass());
                        if tv < best.0 {
                            best = (tv, j as u32);
                        }
                    }
                    best.1
                })
                .collect();
            CoordinationCode::cascade(n, r1, r2, p0.alphabet_size(), encoder, recoder, y_book, z_book)
        }
        (shape, r2) => Err(CoordError::InvalidArgument(format!(
            "target with output shape {shape:?} does not match {} rate(s)",
            if r2.is_some() { 2 } else { 1 }
        ))),
    }
}
