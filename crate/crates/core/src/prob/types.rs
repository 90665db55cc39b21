use serde::{Deserialize, Serialize};

use super::pmf::{shape_len, strides, JointPmf};
use crate::error::{CoordError, Result};

/// Symbol of a small finite alphabet.
pub type Symbol = u8;

/// Empirical joint type of aligned sequences: integer counts summing to `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRecord {
    blocklength: usize,
    shape: Vec<usize>,
    counts: Vec<u32>,
}

impl TypeRecord {
    pub fn blocklength(&self) -> usize {
        self.blocklength
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn to_joint(&self) -> JointPmf {
        let n = self.blocklength as f64;
        JointPmf::from_parts_unchecked(self.shape.clone(), self.counts.iter().map(|&c| c as f64 / n).collect())
    }

    /// Type of the concatenation of the two underlying sequence tuples.
    pub fn concat(&self, other: &TypeRecord) -> Result<TypeRecord> {
        if self.shape != other.shape {
            return Err(CoordError::ShapeMismatch { left: self.shape.clone(), right: other.shape.clone() });
        }
        Ok(TypeRecord {
            blocklength: self.blocklength + other.blocklength,
            shape: self.shape.clone(),
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Joint type of equal-length sequences, one per axis.
pub fn joint_type(sequences: &[&[Symbol]], alphabets: &[usize]) -> Result<TypeRecord> {
    if sequences.is_empty() || sequences.len() != alphabets.len() {
        return Err(CoordError::InvalidArgument(format!(
            "{} sequences for {} alphabets",
            sequences.len(),
            alphabets.len()
        )));
    }
    let n = sequences[0].len();
    if n == 0 {
        return Err(CoordError::LengthMismatch { expected: 1, found: 0 });
    }
    for s in sequences {
        if s.len() != n {
            return Err(CoordError::LengthMismatch { expected: n, found: s.len() });
        }
    }
    for (s, &a) in sequences.iter().zip(alphabets) {
        if let Some(&bad) = s.iter().find(|&&v| v as usize >= a) {
            return Err(CoordError::SymbolOutOfRange { symbol: bad as usize, alphabet: a });
        }
    }
    let st = strides(alphabets);
    let mut counts = vec![0u32; shape_len(alphabets)];
    for i in 0..n {
        let idx: usize = sequences.iter().zip(&st).map(|(s, k)| s[i] as usize * k).sum();
        counts[idx] += 1;
    }
    Ok(TypeRecord { blocklength: n, shape: alphabets.to_vec(), counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_examples() {
        let t = joint_type(&[&[0, 1, 0]], &[2]).unwrap();
        assert_eq!(t.counts(), &[2, 1]);
        let j = t.to_joint();
        assert_eq!(j.mass(), &[2.0 / 3.0, 1.0 / 3.0]);

        let t = joint_type(&[&[0, 0, 0]], &[2]).unwrap();
        assert_eq!(t.to_joint().mass(), &[1.0, 0.0]);

        let t = joint_type(&[&[0, 1], &[1, 0]], &[2, 2]).unwrap();
        assert_eq!(t.to_joint().mass(), &[0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(joint_type(&[&[0, 1], &[1]], &[2, 2]), Err(CoordError::LengthMismatch { .. })));
        assert!(matches!(joint_type(&[&[0, 2]], &[2]), Err(CoordError::SymbolOutOfRange { symbol: 2, alphabet: 2 })));
        assert!(joint_type(&[&[]], &[2]).is_err());
    }

    #[test]
    fn concatenation_is_weighted_average() {
        let a = joint_type(&[&[0, 1, 1], &[1, 1, 0]], &[2, 2]).unwrap();
        let b = joint_type(&[&[0], &[0]], &[2, 2]).unwrap();
        let ab = joint_type(&[&[0, 1, 1, 0], &[1, 1, 0, 0]], &[2, 2]).unwrap();
        assert_eq!(a.concat(&b).unwrap(), ab);
        let (ja, jb, jab) = (a.to_joint(), b.to_joint(), ab.to_joint());
        for i in 0..4 {
            let avg = 0.75 * ja.mass()[i] + 0.25 * jb.mass()[i];
            assert!((avg - jab.mass()[i]).abs() < 1e-15);
        }
    }
}
