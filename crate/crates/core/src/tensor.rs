//! Coordinate-format sparse tensors and mode-order permutations.
//!
//! Indices are stored 0-based, one `u64` column per mode. The FROSTT reader
//! and writer in [`crate::frostt`] are the only places that see 1-based
//! coordinates.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// What to do when the same coordinate tuple appears more than once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    /// Keep the first occurrence and add later values into it.
    SumMerge,
}

/// An order-M sparse tensor in coordinate format.
#[derive(Debug, Clone, PartialEq)]
pub struct CooTensor {
    dims: Vec<u64>,
    indices: Vec<Vec<u64>>,
    values: Vec<f64>,
}

impl CooTensor {
    /// Builds a tensor from 0-based index columns, rejecting duplicates.
    pub fn new(dims: Vec<u64>, indices: Vec<Vec<u64>>, values: Vec<f64>) -> Result<Self> {
        Self::with_policy(dims, indices, values, DuplicatePolicy::Reject)
    }

    pub fn with_policy(
        dims: Vec<u64>,
        indices: Vec<Vec<u64>>,
        values: Vec<f64>,
        policy: DuplicatePolicy,
    ) -> Result<Self> {
        let t = Self::from_parts_unchecked(dims, indices, values)?;
        t.check_bounds()?;
        match policy {
            DuplicatePolicy::Reject => {
                if let Some((first, dup)) = t.first_duplicate() {
                    return Err(Error::Duplicate {
                        line: dup + 1,
                        first: first + 1,
                    });
                }
                Ok(t)
            }
            DuplicatePolicy::SumMerge => Ok(t.merge_duplicates()),
        }
    }

    /// Builds a tensor from `(coordinate, value)` pairs with 0-based coordinates.
    pub fn from_entries(dims: Vec<u64>, entries: Vec<(Vec<u64>, f64)>) -> Result<Self> {
        let order = dims.len();
        let mut indices = vec![Vec::with_capacity(entries.len()); order];
        let mut values = Vec::with_capacity(entries.len());
        for (coord, v) in entries {
            if coord.len() != order {
                return Err(Error::Arity {
                    expected: order,
                    got: coord.len(),
                });
            }
            for (col, c) in indices.iter_mut().zip(coord) {
                col.push(c);
            }
            values.push(v);
        }
        Self::new(dims, indices, values)
    }

    /// Shape checks only: order, column lengths and positive dims. Bounds and
    /// duplicates are not checked, so projections may carry repeated tuples.
    pub(crate) fn from_parts_unchecked(
        dims: Vec<u64>,
        indices: Vec<Vec<u64>>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::UnsupportedOrder(dims.len()));
        }
        if indices.len() != dims.len() {
            return Err(Error::Arity {
                expected: dims.len(),
                got: indices.len(),
            });
        }
        if let Some(m) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidTensor(format!("mode {} has size 0", m + 1)));
        }
        let nnz = values.len();
        if indices.iter().any(|c| c.len() != nnz) {
            return Err(Error::InvalidTensor(
                "index columns and values differ in length".into(),
            ));
        }
        Ok(Self {
            dims,
            indices,
            values,
        })
    }

    fn check_bounds(&self) -> Result<()> {
        for (m, (col, &dim)) in self.indices.iter().zip(&self.dims).enumerate() {
            if let Some(k) = col.iter().position(|&i| i >= dim) {
                return Err(Error::Bounds {
                    line: k + 1,
                    mode: m + 1,
                    index: col[k] + 1,
                    dim,
                });
            }
        }
        Ok(())
    }

    /// Positions of the first duplicated coordinate: (earliest occurrence, later occurrence).
    fn first_duplicate(&self) -> Option<(usize, usize)> {
        let perm = self.sorted_permutation(&ModeOrder::identity(self.order()));
        let mut best: Option<(usize, usize)> = None;
        for w in perm.windows(2) {
            if self.cmp_rows(w[0], w[1], &ModeOrder::identity(self.order())) == Ordering::Equal {
                let pair = (w[0].min(w[1]), w[0].max(w[1]));
                if best.is_none_or(|b| pair.1 < b.1) {
                    best = Some(pair);
                }
            }
        }
        best
    }

    fn merge_duplicates(self) -> Self {
        let id = ModeOrder::identity(self.order());
        let perm = self.sorted_permutation(&id);
        let mut keep = Vec::with_capacity(perm.len());
        let mut values = Vec::with_capacity(perm.len());
        for (pos, &k) in perm.iter().enumerate() {
            if pos > 0 && self.cmp_rows(perm[pos - 1], k, &id) == Ordering::Equal {
                *values.last_mut().unwrap() += self.values[k];
            } else {
                keep.push(k);
                values.push(self.values[k]);
            }
        }
        // restore first-occurrence order
        let mut order: Vec<usize> = (0..keep.len()).collect();
        order.sort_by_key(|&i| keep[i]);
        let indices = self
            .indices
            .iter()
            .map(|col| order.iter().map(|&i| col[keep[i]]).collect())
            .collect();
        let values = order.iter().map(|&i| values[i]).collect();
        Self {
            dims: self.dims,
            indices,
            values,
        }
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// The 0-based index column of mode `m`.
    pub fn column(&self, m: usize) -> &[u64] {
        &self.indices[m]
    }

    pub fn columns(&self) -> &[Vec<u64>] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The 0-based coordinate of nonzero `k`.
    pub fn coord(&self, k: usize) -> Vec<u64> {
        self.indices.iter().map(|c| c[k]).collect()
    }

    /// Product of all mode sizes, `None` when it overflows 128 bits.
    pub fn cell_count(&self) -> Option<u128> {
        checked_product(self.dims.iter().copied())
    }

    /// Column `m` of the result is column `perm[m]` of `self`.
    pub fn permute(&self, mo: &ModeOrder) -> Result<Self> {
        mo.check_arity(self.order())?;
        Ok(Self {
            dims: mo.perm().iter().map(|&p| self.dims[p]).collect(),
            indices: mo.perm().iter().map(|&p| self.indices[p].clone()).collect(),
            values: self.values.clone(),
        })
    }

    /// Keeps only the listed modes, in the listed order. Distinct nonzeros may
    /// collapse onto one projected coordinate; every input nonzero is kept.
    pub fn project(&self, modes: &[usize]) -> Result<Self> {
        if modes.iter().any(|&m| m >= self.order()) {
            return Err(Error::Arity {
                expected: self.order(),
                got: modes.iter().copied().max().unwrap_or(0) + 1,
            });
        }
        Self::from_parts_unchecked(
            modes.iter().map(|&m| self.dims[m]).collect(),
            modes.iter().map(|&m| self.indices[m].clone()).collect(),
            self.values.clone(),
        )
    }

    pub(crate) fn cmp_rows(&self, a: usize, b: usize, mo: &ModeOrder) -> Ordering {
        for &p in mo.perm() {
            let col = &self.indices[p];
            match col[a].cmp(&col[b]) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        Ordering::Equal
    }

    /// Row positions in lexicographic order of the permuted key; stable for equal keys.
    pub fn sorted_permutation(&self, mo: &ModeOrder) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.nnz()).collect();
        perm.par_sort_by(|&a, &b| self.cmp_rows(a, b, mo));
        perm
    }

    /// Reorders nonzeros lexicographically by the columns `perm[0], perm[1], ...`.
    pub fn sort_by_mode_order(&self, mo: &ModeOrder) -> Result<Self> {
        mo.check_arity(self.order())?;
        let perm = self.sorted_permutation(mo);
        Ok(self.gather(&perm))
    }

    pub(crate) fn gather(&self, rows: &[usize]) -> Self {
        Self {
            dims: self.dims.clone(),
            indices: self
                .indices
                .iter()
                .map(|col| rows.iter().map(|&k| col[k]).collect())
                .collect(),
            values: rows.iter().map(|&k| self.values[k]).collect(),
        }
    }
}

/// A permutation of the modes `0..M`, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeOrder(Vec<usize>);

impl ModeOrder {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::Domain(format!(
                    "{perm:?} is not a permutation of 0..{}",
                    perm.len()
                )));
            }
            seen[p] = true;
        }
        Ok(Self(perm))
    }

    /// Builds from 1-based mode numbers, e.g. `[2, 3, 1]`.
    pub fn from_one_based(perm: &[usize]) -> Result<Self> {
        if perm.contains(&0) {
            return Err(Error::Domain("mode numbers are 1-based".into()));
        }
        Self::new(perm.iter().map(|&p| p - 1).collect())
    }

    pub fn identity(order: usize) -> Self {
        Self((0..order).collect())
    }

    pub fn perm(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self` applied after `first`: the result picks column `first[self[m]]`.
    pub fn then(&self, first: &ModeOrder) -> Self {
        Self(self.0.iter().map(|&p| first.0[p]).collect())
    }

    pub(crate) fn check_arity(&self, order: usize) -> Result<()> {
        if self.0.len() != order {
            return Err(Error::Arity {
                expected: order,
                got: self.0.len(),
            });
        }
        Ok(())
    }

    /// The cyclic set `<1,2,3>, <2,3,1>, <3,1,2>` that covers every slice pair
    /// and fiber mode of a 3-mode tensor exactly once.
    pub fn cyclic_set() -> [ModeOrder; 3] {
        [
            ModeOrder(vec![0, 1, 2]),
            ModeOrder(vec![1, 2, 0]),
            ModeOrder(vec![2, 0, 1]),
        ]
    }
}

impl fmt::Display for ModeOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", p + 1)?;
        }
        write!(f, ">")
    }
}

pub(crate) fn checked_product(it: impl IntoIterator<Item = u64>) -> Option<u128> {
    it.into_iter()
        .try_fold(1u128, |acc, d| acc.checked_mul(d as u128))
}
