//! Dense exact linear algebra over `F_p`.
//!
//! Everything downstream (ideals, socles, module submodules, membership
//! checks) is expressed as a [`Subspace`] or as a [`Mat`] solve. Reductions are
//! Gauss-Jordan with the pivot search running left to right, so the echelon
//! forms and the particular solutions returned by [`Mat::solve`] are canonical:
//! free variables are always set to zero.

use std::fmt;

use thiserror::Error;

use crate::field::FieldConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Row-major dense matrix with entries reduced mod p.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    field: FieldConfig,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

/// Result of [`Mat::rref`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rref {
    pub matrix: Mat,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl Mat {
    pub fn zeros(field: FieldConfig, rows: usize, cols: usize) -> Self {
        Mat {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: FieldConfig, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.p();
        }
        m
    }

    /// Builds a matrix from rows; entries are reduced mod p. All rows must
    /// have length `cols`.
    pub fn from_rows(field: FieldConfig, cols: usize, rows: &[Vec<u64>]) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend(r.iter().map(|&x| field.reduce(x)));
        }
        Ok(Mat {
            field,
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix whose columns are the given vectors of length `rows`.
    pub fn from_columns(field: FieldConfig, rows: usize, columns: &[Vec<u64>]) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(field, rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(LinalgError::DimensionMismatch {
                    expected: rows,
                    found: col.len(),
                });
            }
            for (r, &x) in col.iter().enumerate() {
                m.data[r * m.cols + c] = field.reduce(x);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn field(&self) -> FieldConfig {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = self.field.reduce(v);
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let f = self.field;
        let mut out = Mat::zeros(f, self.rows, other.cols);
        let n = other.cols;
        let mut acc = vec![0u64; n];
        for r in 0..self.rows {
            acc.iter_mut().for_each(|x| *x = 0);
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0 {
                    continue;
                }
                let orow = &other.data[k * n..(k + 1) * n];
                for (x, &b) in acc.iter_mut().zip(orow) {
                    *x = f.mul_add(*x, a, b);
                }
            }
            out.data[r * n..(r + 1) * n].copy_from_slice(&acc);
        }
        out
    }

    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        let f = self.field;
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (&a, &b)| if a == 0 || b == 0 { acc } else { f.mul_add(acc, a, b) })
            })
            .collect()
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let f = self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.add(a, b)).collect();
        Mat { data, ..*self }
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, other: &Mat, c: u64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        if c == 0 {
            return;
        }
        let f = self.field;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            if b != 0 {
                *a = f.mul_add(*a, c, b);
            }
        }
    }

    pub fn scale(&self, c: u64) -> Mat {
        let f = self.field;
        let data = self.data.iter().map(|&a| f.mul(a, c)).collect();
        Mat { data, ..*self }
    }

    /// Horizontal concatenation `[a | b | ...]`.
    pub fn hstack(field: FieldConfig, rows: usize, blocks: &[&Mat]) -> Mat {
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Mat::zeros(field, rows, cols);
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack row mismatch");
            for r in 0..rows {
                out.data[r * cols + off..r * cols + off + b.cols].copy_from_slice(b.row(r));
            }
            off += b.cols;
        }
        out
    }

    /// Vertical concatenation.
    pub fn vstack(field: FieldConfig, cols: usize, blocks: &[&Mat]) -> Mat {
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack column mismatch");
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Mat { field, rows, cols, data }
    }

    /// Gauss-Jordan on the first `pivot_cols` columns; later columns are
    /// carried along. Returns the pivot columns.
    fn eliminate(&mut self, pivot_cols: usize) -> Vec<usize> {
        let f = self.field;
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        let mut prow = vec![0u64; cols];
        for c in 0..pivot_cols {
            if r == self.rows {
                break;
            }
            let Some(sel) = (r..self.rows).find(|&i| self.data[i * cols + c] != 0) else {
                continue;
            };
            if sel != r {
                for k in c..cols {
                    self.data.swap(sel * cols + k, r * cols + k);
                }
            }
            let inv = f.inv(self.data[r * cols + c]);
            for k in c..cols {
                let x = &mut self.data[r * cols + k];
                *x = f.mul(*x, inv);
            }
            prow[c..].copy_from_slice(&self.data[r * cols + c..(r + 1) * cols]);
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.data[i * cols + c];
                if factor == 0 {
                    continue;
                }
                let nf = f.neg(factor);
                let row = &mut self.data[i * cols + c..(i + 1) * cols];
                for (x, &p) in row.iter_mut().zip(&prow[c..]) {
                    if p != 0 {
                        *x = f.mul_add(*x, nf, p);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// Reduced row-echelon form over `F_p`.
    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let pivots = m.eliminate(self.cols);
        Rref {
            rank: pivots.len(),
            matrix: m,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// `{v : self * v = 0}`
    pub fn kernel(&self) -> Subspace {
        let Rref { matrix, pivots, .. } = self.rref();
        let f = self.field;
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Subspace::zero(f, self.cols);
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u64; self.cols];
            v[free] = 1;
            for (k, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(matrix.get(k, free));
            }
            basis.insert(&v);
        }
        basis
    }

    /// Column space as a subspace of `F_p^rows`.
    pub fn column_space(&self) -> Subspace {
        Subspace::span(self.field, self.rows, (0..self.cols).map(|c| self.column(c)))
    }

    /// Some `v` with `self * v = b`, or `None` when `b` is outside the column
    /// space. Free variables are zero.
    pub fn solve(&self, b: &[u64]) -> Option<Vec<u64>> {
        assert_eq!(b.len(), self.rows, "solve rhs length mismatch");
        let aug = Mat::hstack(
            self.field,
            self.rows,
            &[self, &Mat::from_columns(self.field, self.rows, &[b.to_vec()]).unwrap()],
        );
        let mut m = aug;
        let pivots = m.eliminate(self.cols + 1);
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut v = vec![0u64; self.cols];
        for (k, &pc) in pivots.iter().enumerate() {
            v[pc] = m.get(k, self.cols);
        }
        Some(v)
    }

    /// Precomputes an elimination so that many right-hand sides can be solved
    /// against the same matrix. Solutions agree with [`Mat::solve`].
    pub fn solver(&self) -> LinearSolver {
        let aug = Mat::hstack(self.field, self.rows, &[self, &Mat::identity(self.field, self.rows)]);
        let mut m = aug;
        let pivots = m.eliminate(self.cols);
        LinearSolver {
            reduced: m,
            cols: self.cols,
            pivots,
        }
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} over {}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

/// Cached elimination `[A | I] -> [R | T]` with `T A = R`.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    reduced: Mat,
    cols: usize,
    pivots: Vec<usize>,
}

impl LinearSolver {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn solve(&self, b: &[u64]) -> Option<Vec<u64>> {
        let rows = self.reduced.rows;
        assert_eq!(b.len(), rows, "solve rhs length mismatch");
        let f = self.reduced.field;
        let tb: Vec<u64> = (0..rows)
            .map(|r| {
                let t = &self.reduced.row(r)[self.cols..];
                t.iter()
                    .zip(b)
                    .fold(0, |acc, (&a, &x)| if a == 0 || x == 0 { acc } else { f.mul_add(acc, a, x) })
            })
            .collect();
        if tb[self.pivots.len()..].iter().any(|&x| x != 0) {
            return None;
        }
        let mut v = vec![0u64; self.cols];
        for (k, &pc) in self.pivots.iter().enumerate() {
            v[pc] = tb[k];
        }
        Some(v)
    }
}

/// A linear subspace of `F_p^n` stored as a reduced row-echelon basis.
///
/// The basis is canonical, so two subspaces are equal iff their bases are.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    field: FieldConfig,
    ambient: usize,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(field: FieldConfig, ambient: usize) -> Self {
        Subspace {
            field,
            ambient,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn full(field: FieldConfig, ambient: usize) -> Self {
        let rows = (0..ambient)
            .map(|i| {
                let mut v = vec![0; ambient];
                v[i] = 1;
                v
            })
            .collect();
        Subspace {
            field,
            ambient,
            rows,
            pivots: (0..ambient).collect(),
        }
    }

    pub fn span<I>(field: FieldConfig, ambient: usize, vectors: I) -> Self
    where
        I: IntoIterator<Item = Vec<u64>>,
    {
        let mut s = Subspace::zero(field, ambient);
        for v in vectors {
            if s.dim() == ambient {
                break;
            }
            s.insert(&v);
        }
        s
    }

    #[inline]
    pub fn field(&self) -> FieldConfig {
        self.field
    }

    #[inline]
    pub fn ambient(&self) -> usize {
        self.ambient
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.ambient
    }

    /// Echelon basis vectors, ordered by increasing pivot.
    pub fn basis(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Coordinates that are not pivots, in increasing order. The standard
    /// vectors at these coordinates span a complement.
    pub fn non_pivots(&self) -> Vec<usize> {
        let mut is_pivot = vec![false; self.ambient];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..self.ambient).filter(|&c| !is_pivot[c]).collect()
    }

    /// Residue of `v` after eliminating every pivot coordinate. Zero iff
    /// `v` lies in the subspace.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.ambient, "vector length mismatch");
        let f = self.field;
        let mut w: Vec<u64> = v.iter().map(|&x| f.reduce(x)).collect();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = w[p];
            if c == 0 {
                continue;
            }
            let nc = f.neg(c);
            for (x, &r) in w[p..].iter_mut().zip(&row[p..]) {
                if r != 0 {
                    *x = f.mul_add(*x, nc, r);
                }
            }
        }
        w
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Adds `v` to the span. Returns whether the dimension grew.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let mut w = self.reduce(v);
        let Some(p) = w.iter().position(|&x| x != 0) else {
            return false;
        };
        let f = self.field;
        let inv = f.inv(w[p]);
        for x in w[p..].iter_mut() {
            *x = f.mul(*x, inv);
        }
        for row in self.rows.iter_mut() {
            let c = row[p];
            if c == 0 {
                continue;
            }
            let nc = f.neg(c);
            for (x, &r) in row[p..].iter_mut().zip(&w[p..]) {
                if r != 0 {
                    *x = f.mul_add(*x, nc, r);
                }
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, w);
        true
    }

    fn check_ambient(&self, other: &Subspace) -> Result<(), LinalgError> {
        if self.ambient != other.ambient {
            return Err(LinalgError::DimensionMismatch {
                expected: self.ambient,
                found: other.ambient,
            });
        }
        Ok(())
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check_ambient(other)?;
        let mut s = self.clone();
        for v in &other.rows {
            s.insert(v);
        }
        Ok(s)
    }

    /// Intersection: `S ∩ T = { S a : C (S a) = 0 }` where the rows of `C`
    /// span the orthogonal complement of `T`.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check_ambient(other)?;
        let f = self.field;
        if self.is_zero() || other.is_full() {
            return Ok(self.clone());
        }
        if other.is_zero() || self.is_full() {
            return Ok(other.clone());
        }
        let t_rows = Mat::from_rows(f, self.ambient, &other.rows)?;
        let constraints = t_rows.kernel();
        let c = Mat::from_rows(f, self.ambient, constraints.basis())?;
        let s_cols = Mat::from_columns(f, self.ambient, &self.rows)?;
        let coeffs = c.mul(&s_cols).kernel();
        Ok(Subspace::span(
            f,
            self.ambient,
            coeffs.basis().iter().map(|a| s_cols.mul_vec(a)),
        ))
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.ambient == other.ambient && self.rows.iter().all(|v| other.contains(v))
    }

    /// Coefficients of `v` in the echelon basis, if `v` lies in the span.
    pub fn coordinates(&self, v: &[u64]) -> Option<Vec<u64>> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivots.iter().map(|&p| self.field.reduce(v[p])).collect())
    }
}
