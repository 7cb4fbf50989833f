//! Minimal sparse complex matrices for operator assembly.
//!
//! The spaces here are tiny (at most ~100 states), so this is a plain
//! coordinate-list representation: enough to assemble ladder-operator
//! products and apply jump operators without pulling in a sparse-algebra
//! dependency.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64 as C64;

/// Sparse complex matrix in coordinate form with fixed shape.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn zeros(rows: usize, cols: usize) -> SparseOp {
        SparseOp { rows, cols, entries: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        debug_assert!(row < self.rows && col < self.cols);
        if value != C64::new(0.0, 0.0) {
            self.entries.push((row, col, value));
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> SparseOp {
        SparseOp {
            rows: self.cols,
            cols: self.rows,
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect(),
        }
    }

    pub fn scaled(&self, factor: C64) -> SparseOp {
        SparseOp {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&(r, c, v)| (r, c, factor * v)).collect(),
        }
    }

    /// Entry-wise sum; shapes must match.
    pub fn add(&self, other: &SparseOp) -> SparseOp {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        SparseOp { rows: self.rows, cols: self.cols, entries }.compacted()
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &SparseOp) -> SparseOp {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut acc: std::collections::HashMap<(usize, usize), C64> =
            std::collections::HashMap::new();
        for &(i, k, a) in &self.entries {
            for &(k2, j, b) in &other.entries {
                if k == k2 {
                    *acc.entry((i, j)).or_insert(C64::new(0.0, 0.0)) += a * b;
                }
            }
        }
        let mut entries: Vec<_> = acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
        entries.sort_by_key(|&(i, j, _)| (i, j));
        entries.retain(|&(_, _, v)| v != C64::new(0.0, 0.0));
        SparseOp { rows: self.rows, cols: other.cols, entries }
    }

    fn compacted(mut self) -> SparseOp {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut out: Vec<(usize, usize, C64)> = Vec::with_capacity(self.entries.len());
        for (i, j, v) in self.entries {
            match out.last_mut() {
                Some((li, lj, lv)) if *li == i && *lj == j => *lv += v,
                _ => out.push((i, j, v)),
            }
        }
        out.retain(|&(_, _, v)| v != C64::new(0.0, 0.0));
        self.entries = out;
        self
    }

    /// `y += self * x`.
    pub fn apply_add(&self, x: &ArrayView1<C64>, y: &mut Array1<C64>) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
    }

    /// `self * x` as a fresh vector.
    pub fn apply(&self, x: &ArrayView1<C64>) -> Array1<C64> {
        let mut y = Array1::zeros(self.rows);
        self.apply_add(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.rows, self.cols));
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// Squared two-norm of `self * x`, i.e. `<x| self^dagger self |x>`.
    pub fn apply_norm_sqr(&self, x: &ArrayView1<C64>) -> f64 {
        self.apply(x).iter().map(|z| z.norm_sqr()).sum()
    }
}
