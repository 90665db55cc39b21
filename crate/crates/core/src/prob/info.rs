//! Information measures in bits.

use super::pmf::{shape_len, strides, JointPmf};
use crate::error::{CoordError, Result};

/// `p * log2(p / q)` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn plogq(p: f64, q: f64) -> f64 {
    if p > 0.0 {
        p * (p / q).log2()
    } else {
        0.0
    }
}

pub fn entropy(mass: &[f64]) -> f64 {
    -mass.iter().map(|&p| if p > 0.0 { p * p.log2() } else { 0.0 }).sum::<f64>()
}

/// Binary entropy function.
pub fn h2(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

/// Mutual information of a `rows x cols` matrix joint.
pub(crate) fn mi_matrix(mass: &[f64], rows: usize, cols: usize) -> f64 {
    let mut pr = vec![0.0; rows];
    let mut pc = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            let m = mass[r * cols + c];
            pr[r] += m;
            pc[c] += m;
        }
    }
    let mut mi = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            mi += plogq(mass[r * cols + c], pr[r] * pc[c]);
        }
    }
    mi.max(0.0)
}

/// `I(A; B)` where `group_a` and `group_b` partition the axes of `joint`.
pub fn mutual_information(joint: &JointPmf, group_a: &[usize], group_b: &[usize]) -> Result<f64> {
    let axes = joint.axes();
    if group_a.is_empty() || group_b.is_empty() {
        return Err(CoordError::DegeneratePartition("both groups must be non-empty".into()));
    }
    let mut seen = vec![false; axes];
    for &a in group_a.iter().chain(group_b) {
        if a >= axes {
            return Err(CoordError::DegeneratePartition(format!("axis {a} out of range")));
        }
        if seen[a] {
            return Err(CoordError::DegeneratePartition(format!("axis {a} listed twice")));
        }
        seen[a] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(CoordError::DegeneratePartition("groups must cover every axis".into()));
    }
    let shape = joint.shape();
    let sa: Vec<usize> = group_a.iter().map(|&a| shape[a]).collect();
    let sb: Vec<usize> = group_b.iter().map(|&a| shape[a]).collect();
    let (ta, tb) = (strides(&sa), strides(&sb));
    let (ra, rb) = (shape_len(&sa), shape_len(&sb));
    let mut matrix = vec![0.0; ra * rb];
    let mut idx = vec![0usize; axes];
    for &m in joint.mass() {
        let ia: usize = group_a.iter().zip(&ta).map(|(&a, s)| idx[a] * s).sum();
        let ib: usize = group_b.iter().zip(&tb).map(|(&a, s)| idx[a] * s).sum();
        matrix[ia * rb + ib] += m;
        super::pmf::increment(&mut idx, shape);
    }
    Ok(mi_matrix(&matrix, ra, rb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{compose, CondPmf, Pmf};

    #[test]
    fn independence_gives_zero() {
        let a = JointPmf::new(vec![2], vec![0.3, 0.7]).unwrap();
        let b = JointPmf::new(vec![3], vec![0.2, 0.5, 0.3]).unwrap();
        let prod = JointPmf::product(&a, &b);
        assert!(mutual_information(&prod, &[0], &[1]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn identity_gives_one_bit() {
        let diag = JointPmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((mutual_information(&diag, &[0], &[1]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binary_symmetric_channel() {
        let joint = compose(&Pmf::uniform(2).unwrap(), &CondPmf::binary_symmetric(0.11).unwrap()).unwrap();
        let mi = mutual_information(&joint, &[0], &[1]).unwrap();
        // 1 - h2(0.11) evaluated by hand: h2(0.11) = 0.4999157...
        let expected = 1.0 + 0.11 * 0.11f64.log2() + 0.89 * 0.89f64.log2();
        assert!((mi - expected).abs() < 1e-14);
        assert!((mi - 0.5).abs() < 1e-3);
    }

    #[test]
    fn three_axis_groups() {
        // Z is a copy of X, Y independent noise.
        let mut mass = vec![0.0; 8];
        for x in 0..2 {
            for y in 0..2 {
                mass[x * 4 + y * 2 + x] = 0.25;
            }
        }
        let joint = JointPmf::new(vec![2, 2, 2], mass).unwrap();
        assert!((mutual_information(&joint, &[0], &[1, 2]).unwrap() - 1.0).abs() < 1e-15);
        let xz = joint.marginal(&[0, 2]).unwrap();
        assert!((mutual_information(&xz, &[0], &[1]).unwrap() - 1.0).abs() < 1e-15);
        let xy = joint.marginal(&[0, 1]).unwrap();
        assert!(mutual_information(&xy, &[0], &[1]).unwrap().abs() < 1e-15);
        assert!(mutual_information(&joint, &[0], &[2]).is_err());
        assert!(matches!(mutual_information(&joint, &[0], &[0, 1, 2]), Err(CoordError::DegeneratePartition(_))));
        assert!(mutual_information(&joint, &[0], &[]).is_err());
    }
}
