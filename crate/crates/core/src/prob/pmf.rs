use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};

/// Absolute tolerance on the total mass of every pmf.
pub const MASS_TOL: f64 = 1e-12;

pub(crate) fn validate_mass(mass: &[f64], what: &str) -> Result<()> {
    if mass.is_empty() {
        return Err(CoordError::InvalidPmf(format!("{what}: empty support")));
    }
    if let Some((i, v)) = mass.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(CoordError::InvalidPmf(format!("{what}: entry {i} is {v}")));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(CoordError::InvalidPmf(format!("{what}: masses sum to {total}")));
    }
    Ok(())
}

/// Pmf over a single finite alphabet `{0, .., alphabet_size - 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    mass: Vec<f64>,
}

impl Pmf {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        validate_mass(&mass, "pmf")?;
        Ok(Self { mass })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(CoordError::InvalidPmf("pmf: empty support".into()));
        }
        Ok(Self { mass: vec![1.0 / size as f64; size] })
    }

    pub fn point_mass(size: usize, at: usize) -> Result<Self> {
        if at >= size {
            return Err(CoordError::SymbolOutOfRange { symbol: at, alphabet: size });
        }
        let mut mass = vec![0.0; size];
        mass[at] = 1.0;
        Ok(Self { mass })
    }

    pub fn alphabet_size(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.mass[symbol]
    }

    pub fn to_joint(&self) -> JointPmf {
        JointPmf { shape: vec![self.mass.len()], mass: self.mass.clone() }
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = CoordError;
    fn try_from(mass: Vec<f64>) -> Result<Self> {
        Pmf::new(mass)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.mass
    }
}

/// Dense, row-major joint pmf over up to a handful of small axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint", into = "RawJoint")]
pub struct JointPmf {
    shape: Vec<usize>,
    mass: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawJoint {
    shape: Vec<usize>,
    mass: Vec<f64>,
}

impl TryFrom<RawJoint> for JointPmf {
    type Error = CoordError;
    fn try_from(raw: RawJoint) -> Result<Self> {
        JointPmf::new(raw.shape, raw.mass)
    }
}

impl From<JointPmf> for RawJoint {
    fn from(j: JointPmf) -> Self {
        RawJoint { shape: j.shape, mass: j.mass }
    }
}

pub(crate) fn shape_len(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Row-major strides for `shape`.
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

impl JointPmf {
    pub fn new(shape: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(CoordError::InvalidPmf(format!("joint pmf: bad shape {shape:?}")));
        }
        if shape_len(&shape) != mass.len() {
            return Err(CoordError::InvalidPmf(format!(
                "joint pmf: shape {shape:?} needs {} entries, got {}",
                shape_len(&shape),
                mass.len()
            )));
        }
        validate_mass(&mass, "joint pmf")?;
        Ok(Self { shape, mass })
    }

    pub(crate) fn from_parts_unchecked(shape: Vec<usize>, mass: Vec<f64>) -> Self {
        debug_assert_eq!(shape_len(&shape), mass.len());
        Self { shape, mass }
    }

    pub fn uniform(shape: Vec<usize>) -> Result<Self> {
        let len = shape_len(&shape);
        Self::new(shape, vec![1.0 / len.max(1) as f64; len])
    }

    /// Independent product `a ⊗ b`, axes of `a` first.
    pub fn product(a: &JointPmf, b: &JointPmf) -> JointPmf {
        let mut shape = a.shape.clone();
        shape.extend_from_slice(&b.shape);
        let mut mass = Vec::with_capacity(a.mass.len() * b.mass.len());
        for pa in &a.mass {
            for pb in &b.mass {
                mass.push(pa * pb);
            }
        }
        JointPmf { shape, mass }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn axes(&self) -> usize {
        self.shape.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(strides(&self.shape)).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.mass[self.flat_index(idx)]
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &JointPmf, lambda: f64) -> Result<JointPmf> {
        check_same_shape(self, other)?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(CoordError::InvalidArgument(format!("mixing weight {lambda} outside [0,1]")));
        }
        let mass = self.mass.iter().zip(&other.mass).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        Ok(JointPmf { shape: self.shape.clone(), mass })
    }

    /// Marginal over `axes` (kept in ascending order).
    pub fn marginal(&self, axes: &[usize]) -> Result<JointPmf> {
        if axes.is_empty() {
            return Err(CoordError::InvalidArgument("marginal over an empty axis set".into()));
        }
        let mut keep: Vec<usize> = axes.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&a) = keep.iter().find(|&&a| a >= self.axes()) {
            return Err(CoordError::InvalidArgument(format!("axis {a} out of range")));
        }
        let out_shape: Vec<usize> = keep.iter().map(|&a| self.shape[a]).collect();
        let out_strides = strides(&out_shape);
        let mut out = vec![0.0; shape_len(&out_shape)];
        let mut idx = vec![0usize; self.axes()];
        for &m in &self.mass {
            let o: usize = keep.iter().zip(&out_strides).map(|(&a, s)| idx[a] * s).sum();
            out[o] += m;
            increment(&mut idx, &self.shape);
        }
        Ok(JointPmf { shape: out_shape, mass: out })
    }

    pub fn marginal_pmf(&self, axis: usize) -> Result<Pmf> {
        Ok(Pmf { mass: self.marginal(&[axis])?.mass })
    }

    /// Conditional of the remaining axes given `given_axis`. Rows with zero
    /// marginal mass default to uniform and are listed in `defaulted_rows`.
    pub fn conditional(&self, given_axis: usize) -> Result<Conditional> {
        if given_axis >= self.axes() {
            return Err(CoordError::InvalidArgument(format!("axis {given_axis} out of range")));
        }
        if self.axes() < 2 {
            return Err(CoordError::InvalidArgument("conditional needs at least two axes".into()));
        }
        let mut order = vec![given_axis];
        order.extend((0..self.axes()).filter(|&a| a != given_axis));
        let permuted = self.permute(&order);
        let input_size = self.shape[given_axis];
        let output_shape: Vec<usize> = order[1..].iter().map(|&a| self.shape[a]).collect();
        let width = shape_len(&output_shape);
        let mut rows = permuted.mass;
        let mut defaulted_rows = Vec::new();
        for x in 0..input_size {
            let row = &mut rows[x * width..(x + 1) * width];
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|v| *v /= total);
            } else {
                row.iter_mut().for_each(|v| *v = 1.0 / width as f64);
                defaulted_rows.push(x);
            }
        }
        if !defaulted_rows.is_empty() {
            log::warn!("conditional: zero-mass rows {defaulted_rows:?} set to uniform");
        }
        Ok(Conditional { cond: CondPmf { input_size, output_shape, rows }, defaulted_rows })
    }

    /// Reorder axes so that output axis `i` is input axis `order[i]`.
    pub fn permute(&self, order: &[usize]) -> JointPmf {
        let new_shape: Vec<usize> = order.iter().map(|&a| self.shape[a]).collect();
        let new_strides = strides(&new_shape);
        let mut mass = vec![0.0; self.mass.len()];
        let mut idx = vec![0usize; self.axes()];
        for &m in &self.mass {
            let o: usize = order.iter().zip(&new_strides).map(|(&a, s)| idx[a] * s).sum();
            mass[o] = m;
            increment(&mut idx, &self.shape);
        }
        JointPmf { shape: new_shape, mass }
    }
}

/// Odometer increment of a row-major multi-index.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < shape[a] {
            return;
        }
        idx[a] = 0;
    }
}

/// Conditional pmf: for every input symbol, a (joint) pmf over the outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCond", into = "RawCond")]
pub struct CondPmf {
    input_size: usize,
    output_shape: Vec<usize>,
    rows: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawCond {
    input_size: usize,
    output_shape: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<RawCond> for CondPmf {
    type Error = CoordError;
    fn try_from(raw: RawCond) -> Result<Self> {
        if raw.rows.len() != raw.input_size {
            return Err(CoordError::InvalidPmf(format!(
                "conditional: {} rows for input size {}",
                raw.rows.len(),
                raw.input_size
            )));
        }
        CondPmf::from_rows(raw.rows, raw.output_shape)
    }
}

impl From<CondPmf> for RawCond {
    fn from(c: CondPmf) -> Self {
        let rows = (0..c.input_size).map(|x| c.row(x).to_vec()).collect();
        RawCond { input_size: c.input_size, output_shape: c.output_shape, rows }
    }
}

/// Result of [`JointPmf::conditional`].
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional {
    pub cond: CondPmf,
    pub defaulted_rows: Vec<usize>,
}

impl CondPmf {
    pub fn new(input_size: usize, output_shape: Vec<usize>, rows: Vec<f64>) -> Result<Self> {
        if input_size == 0 || output_shape.is_empty() || output_shape.contains(&0) {
            return Err(CoordError::InvalidPmf(format!("conditional: bad sizes {input_size} -> {output_shape:?}")));
        }
        let width = shape_len(&output_shape);
        if rows.len() != input_size * width {
            return Err(CoordError::InvalidPmf(format!(
                "conditional: expected {} entries, got {}",
                input_size * width,
                rows.len()
            )));
        }
        for x in 0..input_size {
            validate_mass(&rows[x * width..(x + 1) * width], &format!("conditional row {x}"))?;
        }
        Ok(Self { input_size, output_shape, rows })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, output_shape: Vec<usize>) -> Result<Self> {
        let input_size = rows.len();
        Self::new(input_size, output_shape, rows.concat())
    }

    pub(crate) fn from_parts_unchecked(input_size: usize, output_shape: Vec<usize>, rows: Vec<f64>) -> Self {
        Self { input_size, output_shape, rows }
    }

    /// Noiseless copy channel on an alphabet of `size` symbols.
    pub fn identity(size: usize) -> Result<Self> {
        let mut rows = vec![0.0; size * size];
        for x in 0..size {
            rows[x * size + x] = 1.0;
        }
        Self::new(size, vec![size], rows)
    }

    /// Binary symmetric channel with crossover `flip`.
    pub fn binary_symmetric(flip: f64) -> Result<Self> {
        Self::new(2, vec![2], vec![1.0 - flip, flip, flip, 1.0 - flip])
    }

    /// Every row equal to `row`: an input-independent channel.
    pub fn constant(input_size: usize, row: &JointPmf) -> Self {
        let rows = (0..input_size).flat_map(|_| row.mass().iter().copied()).collect();
        Self { input_size, output_shape: row.shape().to_vec(), rows }
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn output_len(&self) -> usize {
        shape_len(&self.output_shape)
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let w = self.output_len();
        &self.rows[x * w..(x + 1) * w]
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }
}

pub(crate) fn check_same_shape(p: &JointPmf, q: &JointPmf) -> Result<()> {
    if p.shape != q.shape {
        return Err(CoordError::ShapeMismatch { left: p.shape.clone(), right: q.shape.clone() });
    }
    Ok(())
}

/// Half the l1 distance between two equally sized mass vectors.
pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn total_variation(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    check_same_shape(p, q)?;
    Ok(tv_slices(&p.mass, &q.mass).min(1.0))
}

/// Closed total-variation ball membership, `TV(p, q) <= delta` up to `MASS_TOL`.
pub fn in_delta_neighborhood(p: &JointPmf, q: &JointPmf, delta: f64) -> Result<bool> {
    if delta < 0.0 || delta.is_nan() {
        return Err(CoordError::NegativeDelta(delta));
    }
    Ok(total_variation(p, q)? <= delta + MASS_TOL)
}

/// `p0(x) * cond(.|x)` as a joint pmf with X on axis 0.
pub fn compose(p0: &Pmf, cond: &CondPmf) -> Result<JointPmf> {
    if p0.alphabet_size() != cond.input_size {
        return Err(CoordError::ShapeMismatch { left: vec![p0.alphabet_size()], right: vec![cond.input_size] });
    }
    let w = cond.output_len();
    let mut mass = Vec::with_capacity(cond.rows.len());
    for x in 0..cond.input_size {
        mass.extend(cond.row(x).iter().map(|v| p0.prob(x) * v));
    }
    let mut shape = vec![cond.input_size];
    shape.extend_from_slice(&cond.output_shape);
    debug_assert_eq!(mass.len(), cond.input_size * w);
    Ok(JointPmf { shape, mass })
}
