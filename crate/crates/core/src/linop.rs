//! Sparse complex operators on tensor powers `E^{⊗n}` of a graded space.
//!
//! Basis labels are `1..=N`. An operator stores, for each input multi-index,
//! the sparse column of output multi-indices it maps to. Everything is kept in
//! `BTreeMap`s so iteration order, and hence serialized output, is stable.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grading::{GradingGroup, GroupElement};

/// Coefficients below this magnitude are dropped from operators.
pub const DROP_TOL: f64 = 1e-15;

pub type MultiIndex = Vec<usize>;
pub type Column = BTreeMap<MultiIndex, Complex64>;

/// Ordered homogeneous basis `e_1..e_N` with its grading map `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedBasis {
    group: GradingGroup,
    grades: Vec<GroupElement>,
}

impl GradedBasis {
    /// `labels` may come in any order but must be exactly `1..=N`.
    pub fn new(group: GradingGroup, labelled: Vec<(usize, GroupElement)>) -> Result<Self> {
        if labelled.is_empty() {
            return Err(Error::invalid("basis must contain at least one label"));
        }
        let n = labelled.len();
        let mut grades: Vec<Option<GroupElement>> = vec![None; n];
        for (label, grade) in labelled {
            if label == 0 || label > n {
                return Err(Error::invalid(format!("label {label} outside 1..={n}")));
            }
            if !group.contains(&grade) {
                return Err(Error::invalid(format!("grade {grade} of label {label} is not a reduced element of {group}")));
            }
            if grades[label - 1].replace(grade).is_some() {
                return Err(Error::invalid(format!("label {label} appears twice")));
            }
        }
        let grades = grades.into_iter().map(|g| g.expect("all labels filled")).collect();
        Ok(Self { group, grades })
    }

    /// Standard gradation `p(i) = ξ_i`, one label per generator.
    pub fn standard(group: GradingGroup) -> Self {
        let grades = (0..group.rank()).map(|i| group.generator(i)).collect();
        Self { group, grades }
    }

    pub fn group(&self) -> &GradingGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.grades.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> {
        1..=self.grades.len()
    }

    pub fn grade(&self, label: usize) -> &GroupElement {
        &self.grades[label - 1]
    }

    pub fn grades(&self) -> &[GroupElement] {
        &self.grades
    }

    /// Distinct grades realized by the basis, sorted.
    pub fn grades_in_use(&self) -> Vec<GroupElement> {
        let set: BTreeSet<&GroupElement> = self.grades.iter().collect();
        set.into_iter().cloned().collect()
    }

    /// `I_α`.
    pub fn labels_of_grade(&self, alpha: &GroupElement) -> Vec<usize> {
        self.labels().filter(|&l| self.grade(l) == alpha).collect()
    }
}

/// Source grades `(α, β)` of a homogeneous block.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockKey {
    pub src: (GroupElement, GroupElement),
}

impl BlockKey {
    pub fn new(alpha: GroupElement, beta: GroupElement) -> Self {
        Self { src: (alpha, beta) }
    }

    pub fn of_input(basis: &GradedBasis, i: usize, j: usize) -> Self {
        Self::new(basis.grade(i).clone(), basis.grade(j).clone())
    }
}

/// Every multi-index in `(1..=dim)^arity`, lexicographic.
pub fn multi_indices(dim: usize, arity: usize) -> impl Iterator<Item = MultiIndex> {
    let total = dim.pow(arity as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; arity];
        for slot in idx.iter_mut().rev() {
            *slot = flat % dim + 1;
            flat /= dim;
        }
        idx
    })
}

fn flat_index(idx: &[usize], dim: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + (i - 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorOperator {
    dim: usize,
    arity: usize,
    entries: BTreeMap<MultiIndex, Column>,
}

impl TensorOperator {
    pub fn zero(dim: usize, arity: usize) -> Result<Self> {
        if dim == 0 || arity == 0 {
            return Err(Error::invalid(format!("operator needs dim >= 1 and arity >= 1, got ({dim}, {arity})")));
        }
        Ok(Self { dim, arity, entries: BTreeMap::new() })
    }

    /// Collects `(input, output, coefficient)` triples, summing duplicates.
    pub fn from_entries<I>(dim: usize, arity: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, MultiIndex, Complex64)>,
    {
        let mut op = Self::zero(dim, arity)?;
        for (input, output, c) in entries {
            op.check_index(&input)?;
            op.check_index(&output)?;
            op.add_entry(input, output, c);
        }
        op.prune();
        Ok(op)
    }

    pub fn identity(dim: usize, arity: usize) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        Self::from_entries(dim, arity, multi_indices(dim, arity).map(|i| (i.clone(), i, one)))
    }

    /// `e_i ⊗ e_j ↦ e_j ⊗ e_i`.
    pub fn flip(dim: usize) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        Self::from_entries(
            dim,
            2,
            multi_indices(dim, 2).map(|i| (i.clone(), vec![i[1], i[0]], one)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn nnz(&self) -> usize {
        self.entries.values().map(|c| c.len()).sum()
    }

    /// Image of a basis vector; `None` when it is mapped to zero.
    pub fn column(&self, input: &[usize]) -> Option<&Column> {
        self.entries.get(input)
    }

    pub fn entry(&self, input: &[usize], output: &[usize]) -> Complex64 {
        self.entries
            .get(input)
            .and_then(|c| c.get(output))
            .copied()
            .unwrap_or_default()
    }

    /// `(input, output, coefficient)` in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, Complex64)> {
        self.entries
            .iter()
            .flat_map(|(i, col)| col.iter().map(move |(o, c)| (i, o, *c)))
    }

    pub fn apply(&self, v: &Column) -> Column {
        let mut out = Column::new();
        for (input, &a) in v {
            if let Some(col) = self.entries.get(input) {
                for (o, &c) in col {
                    *out.entry(o.clone()).or_default() += a * c;
                }
            }
        }
        out.retain(|_, c| c.norm() >= DROP_TOL);
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &TensorOperator) -> Result<TensorOperator> {
        self.check_same_shape(other)?;
        let mut out = Self::zero(self.dim, self.arity)?;
        for (input, col) in &other.entries {
            let image = self.apply(col);
            if !image.is_empty() {
                out.entries.insert(input.clone(), image);
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, s: Complex64) -> TensorOperator {
        let mut out = self.clone();
        for col in out.entries.values_mut() {
            for c in col.values_mut() {
                *c *= s;
            }
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &TensorOperator) -> Result<TensorOperator> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (i, o, c) in other.iter() {
            out.add_entry(i.clone(), o.clone(), c);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &TensorOperator) -> Result<TensorOperator> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Embeds an arity-2 operator on legs `(first_leg, first_leg + 1)` of
    /// `E^{⊗total_arity}`; legs are 1-based, so `R_12` is `first_leg = 1`.
    pub fn place_on_legs(&self, total_arity: usize, first_leg: usize) -> Result<TensorOperator> {
        if self.arity != 2 {
            return Err(Error::Shape(format!("leg placement needs arity 2, got {}", self.arity)));
        }
        if first_leg == 0 || first_leg + 1 > total_arity {
            return Err(Error::invalid(format!(
                "first leg {first_leg} out of range 1..={}",
                total_arity.saturating_sub(1)
            )));
        }
        let p = first_leg - 1;
        let mut out = Self::zero(self.dim, total_arity)?;
        for input in multi_indices(self.dim, total_arity) {
            let Some(col) = self.entries.get(&input[p..p + 2]) else {
                continue;
            };
            let mut image = Column::new();
            for (o, &c) in col {
                let mut idx = input.clone();
                idx[p] = o[0];
                idx[p + 1] = o[1];
                image.insert(idx, c);
            }
            out.entries.insert(input, image);
        }
        Ok(out)
    }

    /// Restriction to inputs `(i, j)` with `p(i) = α`, `p(j) = β`; outputs are
    /// left untouched.
    pub fn block_of(&self, basis: &GradedBasis, key: &BlockKey) -> Result<TensorOperator> {
        self.check_basis(basis)?;
        let mut out = Self::zero(self.dim, 2)?;
        for (input, col) in &self.entries {
            if basis.grade(input[0]) == &key.src.0 && basis.grade(input[1]) == &key.src.1 {
                out.entries.insert(input.clone(), col.clone());
            }
        }
        Ok(out)
    }

    /// Blocks realized by the basis, keyed by source grades.
    pub fn blocks(&self, basis: &GradedBasis) -> Result<BTreeMap<BlockKey, TensorOperator>> {
        self.check_basis(basis)?;
        let grades = basis.grades_in_use();
        let mut out = BTreeMap::new();
        for a in &grades {
            for b in &grades {
                let key = BlockKey::new(a.clone(), b.clone());
                let block = self.block_of(basis, &key)?;
                out.insert(key, block);
            }
        }
        Ok(out)
    }

    /// Max absolute entrywise difference.
    pub fn distance(&self, other: &TensorOperator) -> Result<f64> {
        Ok(self.distance_by_input(other)?.0)
    }

    /// Max absolute entrywise difference together with the input column that
    /// attains it (first in lexicographic order on ties).
    pub fn distance_by_input(&self, other: &TensorOperator) -> Result<(f64, MultiIndex)> {
        self.check_same_shape(other)?;
        let empty = Column::new();
        let mut worst = (0.0_f64, vec![1; self.arity]);
        for input in multi_indices(self.dim, self.arity) {
            let a = self.entries.get(&input).unwrap_or(&empty);
            let b = other.entries.get(&input).unwrap_or(&empty);
            let d = column_distance(a, b);
            if d > worst.0 {
                worst = (d, input);
            }
        }
        Ok(worst)
    }

    /// Dense matrix with `M[out, in]`, rows/columns in lexicographic order.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim.pow(self.arity as u32);
        let mut m = DMatrix::zeros(n, n);
        for (i, o, c) in self.iter() {
            m[(flat_index(o, self.dim), flat_index(i, self.dim))] = c;
        }
        m
    }

    pub fn from_dense(dim: usize, arity: usize, m: &DMatrix<Complex64>) -> Result<TensorOperator> {
        let n = dim.pow(arity as u32);
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Shape(format!("dense matrix {}x{} does not match {n}x{n}", m.nrows(), m.ncols())));
        }
        let idx: Vec<MultiIndex> = multi_indices(dim, arity).collect();
        Self::from_entries(
            dim,
            arity,
            (0..n).flat_map(|c| {
                let idx = &idx;
                (0..n).map(move |r| (idx[c].clone(), idx[r].clone(), m[(r, c)]))
            }),
        )
    }

    /// Dense inverse; fails with the determinant magnitude when singular.
    pub fn inverse(&self) -> Result<TensorOperator> {
        let m = self.to_dense();
        let det = m.clone().determinant().norm();
        let scale = m.iter().map(|c| c.norm()).fold(0.0_f64, f64::max).max(1.0);
        if !(det > 1e-12 * scale.powi(m.nrows() as i32)) {
            return Err(Error::Singular { det });
        }
        let inv = m.try_inverse().ok_or(Error::Singular { det })?;
        Self::from_dense(self.dim, self.arity, &inv)
    }

    pub fn to_json(&self) -> OperatorJson {
        OperatorJson {
            dim: self.dim,
            arity: self.arity,
            entries: self
                .iter()
                .map(|(i, o, c)| EntryJson { input: i.clone(), output: o.clone(), re: c.re, im: c.im })
                .collect(),
        }
    }

    pub fn from_json(json: &OperatorJson) -> Result<TensorOperator> {
        Self::from_entries(
            json.dim,
            json.arity,
            json.entries
                .iter()
                .map(|e| (e.input.clone(), e.output.clone(), Complex64::new(e.re, e.im))),
        )
    }

    fn add_entry(&mut self, input: MultiIndex, output: MultiIndex, c: Complex64) {
        *self.entries.entry(input).or_default().entry(output).or_default() += c;
    }

    fn prune(&mut self) {
        for col in self.entries.values_mut() {
            col.retain(|_, c| c.norm() >= DROP_TOL);
        }
        self.entries.retain(|_, col| !col.is_empty());
    }

    fn check_index(&self, idx: &[usize]) -> Result<()> {
        if idx.len() != self.arity {
            return Err(Error::DimensionMismatch { expected: self.arity, got: idx.len() });
        }
        if let Some(&i) = idx.iter().find(|&&i| i == 0 || i > self.dim) {
            return Err(Error::invalid(format!("index {i} outside 1..={}", self.dim)));
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &TensorOperator) -> Result<()> {
        if self.dim != other.dim || self.arity != other.arity {
            return Err(Error::Shape(format!(
                "(dim {}, arity {}) vs (dim {}, arity {})",
                self.dim, self.arity, other.dim, other.arity
            )));
        }
        Ok(())
    }

    pub(crate) fn check_basis(&self, basis: &GradedBasis) -> Result<()> {
        if basis.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: basis.dim() });
        }
        Ok(())
    }
}

pub(crate) fn column_distance(a: &Column, b: &Column) -> f64 {
    let mut d = 0.0_f64;
    for (o, &x) in a {
        d = d.max((x - b.get(o).copied().unwrap_or_default()).norm());
    }
    for (o, &y) in b {
        if !a.contains_key(o) {
            d = d.max(y.norm());
        }
    }
    d
}

/// Serialized operator: entries sorted by `(in, out)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub dim: usize,
    pub arity: usize,
    pub entries: Vec<EntryJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryJson {
    #[serde(rename = "in")]
    pub input: Vec<usize>,
    #[serde(rename = "out")]
    pub output: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn identity_has_diagonal_units() {
        let id = TensorOperator::identity(2, 2).unwrap();
        assert_eq!(id.nnz(), 4);
        for i in multi_indices(2, 2) {
            assert_eq!(id.entry(&i, &i), one());
        }
    }

    #[test]
    fn identity_is_neutral() {
        let f = TensorOperator::flip(3).unwrap();
        let id = TensorOperator::identity(3, 2).unwrap();
        assert_eq!(id.compose(&f).unwrap(), f);
        assert_eq!(f.compose(&id).unwrap(), f);
    }

    #[test]
    fn flip_behaviour() {
        let f = TensorOperator::flip(2).unwrap();
        assert_eq!(f.entry(&[1, 2], &[2, 1]), one());
        let ff = f.compose(&f).unwrap();
        assert_eq!(ff, TensorOperator::identity(2, 2).unwrap());
        assert_eq!(f.distance(&TensorOperator::identity(2, 2).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn legs() {
        let f = TensorOperator::flip(3).unwrap();
        let f23 = f.place_on_legs(3, 2).unwrap();
        let col = f23.column(&[1, 2, 3]).unwrap();
        assert_eq!(col.len(), 1);
        assert_eq!(col.get(&vec![1, 3, 2]), Some(&one()));

        let id = TensorOperator::identity(2, 2).unwrap();
        assert_eq!(id.place_on_legs(4, 2).unwrap(), TensorOperator::identity(2, 4).unwrap());

        assert!(f.place_on_legs(3, 0).is_err());
        assert!(f.place_on_legs(3, 3).is_err());
        assert!(f23.place_on_legs(4, 1).is_err());
    }

    #[test]
    fn shape_mismatch() {
        let a = TensorOperator::identity(2, 2).unwrap();
        let b = TensorOperator::identity(3, 2).unwrap();
        assert!(matches!(a.compose(&b), Err(Error::Shape(_))));
        assert!(a.distance(&TensorOperator::identity(2, 3).unwrap()).is_err());
    }

    #[test]
    fn duplicates_merge_and_small_drop() {
        let op = TensorOperator::from_entries(
            2,
            1,
            vec![
                (vec![1], vec![2], one()),
                (vec![1], vec![2], one()),
                (vec![2], vec![2], Complex64::new(1e-16, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.entry(&[1], &[2]), Complex64::new(2.0, 0.0));
        assert!(TensorOperator::from_entries(2, 1, vec![(vec![3], vec![1], one())]).is_err());
    }

    #[test]
    fn blocks_partition_inputs() {
        let g = GradingGroup::z2();
        let basis = GradedBasis::new(
            g.clone(),
            vec![(1, g.zero()), (2, g.generator(0)), (3, g.zero())],
        )
        .unwrap();
        let id = TensorOperator::identity(3, 2).unwrap();
        let blocks = id.blocks(&basis).unwrap();
        assert_eq!(blocks.len(), 4);
        let mut union = TensorOperator::zero(3, 2).unwrap();
        for b in blocks.values() {
            union = union.add(b).unwrap();
        }
        assert_eq!(union, id);
        let key = BlockKey::new(g.zero(), g.generator(0));
        let b = id.block_of(&basis, &key).unwrap();
        let inputs: Vec<_> = b.iter().map(|(i, _, _)| i.clone()).collect();
        assert_eq!(inputs, vec![vec![1, 2], vec![3, 2]]);
    }

    #[test]
    fn basis_validation() {
        let g = GradingGroup::z2();
        assert!(GradedBasis::new(g.clone(), vec![(1, g.zero()), (1, g.zero())]).is_err());
        assert!(GradedBasis::new(g.clone(), vec![(1, g.zero()), (3, g.zero())]).is_err());
        assert!(GradedBasis::new(g.clone(), vec![]).is_err());
        let foreign = GradingGroup::free(2).unwrap().generator(1);
        assert!(GradedBasis::new(g, vec![(1, foreign)]).is_err());
    }

    #[test]
    fn dense_round_trip_and_inverse() {
        let f = TensorOperator::flip(2).unwrap().scaled(Complex64::new(2.0, 1.0));
        let back = TensorOperator::from_dense(2, 2, &f.to_dense()).unwrap();
        assert!(back.distance(&f).unwrap() < 1e-15);
        let inv = f.inverse().unwrap();
        let prod = f.compose(&inv).unwrap();
        assert!(prod.distance(&TensorOperator::identity(2, 2).unwrap()).unwrap() < 1e-14);
        assert!(matches!(TensorOperator::zero(2, 2).unwrap().inverse(), Err(Error::Singular { .. })));
    }

    #[test]
    fn json_is_sorted() {
        let f = TensorOperator::flip(2).unwrap();
        let j = f.to_json();
        let ins: Vec<_> = j.entries.iter().map(|e| e.input.clone()).collect();
        assert_eq!(ins, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        assert_eq!(TensorOperator::from_json(&j).unwrap(), f);
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.starts_with(r#"{"dim":2,"arity":2,"entries":[{"in":[1,1],"out":[1,1],"re":1.0,"im":0.0}"#));
    }
}
