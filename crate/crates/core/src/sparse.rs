//! Compressed sparse column storage for symmetric positive definite matrices.
//!
//! Both triangles are stored, so column `k` doubles as row `k`. Row indices
//! are sorted within every column, which turns restriction to a leading
//! principal block into a prefix of each column.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// SPD matrix in CSC form with the full symmetric pattern.
///
/// Indices are 0-based. Construction enforces structural and numerical
/// symmetry and a strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSparseMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymSparseMatrix {
    /// Assembles a matrix from coordinate entries.
    ///
    /// Every off-diagonal triplet `(i, j, v)` describes the symmetric pair
    /// `(i, j)` and `(j, i)`, so callers pass one triangle (either one).
    /// Duplicates are summed. Explicit zeros are kept in the pattern.
    pub fn from_triplets<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let entries: Vec<(usize, usize, f64)> = entries.into_iter().collect();
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in &entries {
            let bound = n;
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, bound });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, bound });
            }
            counts[j + 1] += 1;
            if i != j {
                counts[i + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let total = counts[n];
        let mut next = counts.clone();
        let mut scratch = vec![(0usize, 0.0f64); total];
        for &(i, j, v) in &entries {
            scratch[next[j]] = (i, v);
            next[j] += 1;
            if i != j {
                scratch[next[i]] = (j, v);
                next[i] += 1;
            }
        }

        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        col_ptr.push(0);
        for j in 0..n {
            let column = &mut scratch[counts[j]..counts[j + 1]];
            // Stable sort keeps duplicate summation order identical in
            // column j and its mirror, so the sums agree bit for bit.
            column.sort_by_key(|&(row, _)| row);
            let mut last: Option<usize> = None;
            for &(row, v) in column.iter() {
                if last == Some(row) {
                    *values.last_mut().expect("entry pushed") += v;
                } else {
                    row_idx.push(row);
                    values.push(v);
                    last = Some(row);
                }
            }
            col_ptr.push(row_idx.len());
        }

        let matrix = SymSparseMatrix {
            n,
            col_ptr,
            row_idx,
            values,
        };
        matrix.check_diagonal()?;
        Ok(matrix)
    }

    /// Sparse copy of a dense symmetric matrix. Zero off-diagonal entries
    /// are dropped; asymmetry is rejected.
    pub fn from_dense(a: &DenseMatrix) -> Result<Self> {
        let n = a.dim();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                let v = a.get(i, j);
                if v != a.get(j, i) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                if i == j || v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, entries)
    }

    fn check_diagonal(&self) -> Result<()> {
        for k in 0..self.n {
            let value = self.get(k, k).unwrap_or(0.0);
            if !(value > 0.0) {
                return Err(Error::NonPositiveDiagonal { index: k, value });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries, both triangles.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries with `row >= col`, the count Matrix Market files report.
    pub fn nnz_lower(&self) -> usize {
        (self.nnz() + self.n) / 2
    }

    /// Entries with `row <= col`. Equal to [`nnz_lower`](Self::nnz_lower).
    pub fn nnz_upper(&self) -> usize {
        self.nnz_lower()
    }

    /// Row indices and values of column `j`.
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (rows, vals) = self.column(j);
        rows.binary_search(&i).ok().map(|p| vals[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|k| self.get(k, k).expect("diagonal present"))
            .collect()
    }

    /// Lower-triangle triplets `(i, j, v)` with `i >= j`, column by column.
    pub fn lower_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |j| {
            let (rows, vals) = self.column(j);
            let start = rows.partition_point(|&r| r < j);
            rows[start..]
                .iter()
                .zip(&vals[start..])
                .map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n);
        for j in 0..self.n {
            let (rows, vals) = self.column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x` without allocating. Uses the symmetric pattern: `y_i` is
    /// the dot product of column `i` with `x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        if y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: y.len(),
            });
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let (rows, vals) = self.column(i);
            *yi = rows.iter().zip(vals).map(|(&r, &v)| v * x[r]).sum();
        }
        Ok(())
    }

    /// View of the leading `k x k` principal block.
    pub fn leading_block(&self, k: usize) -> BlockView<'_> {
        assert!(k <= self.n, "block size {k} exceeds dimension {}", self.n);
        BlockView { matrix: self, dim: k }
    }

    pub fn full(&self) -> BlockView<'_> {
        self.leading_block(self.n)
    }

    /// `A[0..k, 0..k] z` for a sparse `z` supported in `0..k`.
    pub fn leading_block_matvec(&self, k: usize, z: &SparseVector) -> Result<Vec<f64>> {
        if k > self.n {
            return Err(Error::IndexOutOfRange {
                index: k,
                bound: self.n,
            });
        }
        let block = self.leading_block(k);
        let mut y = vec![0.0; k];
        for (j, zj) in z.iter() {
            if j >= k {
                return Err(Error::IndexOutOfRange { index: j, bound: k });
            }
            let (rows, vals) = block.column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * zj;
            }
        }
        Ok(y)
    }

    /// The bordering column `A[0..k, k]` as a dense vector of length `k`.
    pub fn leading_column(&self, k: usize) -> Result<Vec<f64>> {
        if k == 0 || k >= self.n {
            return Err(Error::IndexOutOfRange {
                index: k,
                bound: self.n,
            });
        }
        let mut v = vec![0.0; k];
        let (rows, vals) = self.leading_block(k).column(k);
        for (&i, &a) in rows.iter().zip(vals) {
            v[i] = a;
        }
        Ok(v)
    }

    /// Dense principal submatrix `A[J, J]`.
    pub fn gather_principal(&self, set: &IndexSet) -> Result<DenseMatrix> {
        if let Some(&last) = set.as_slice().last() {
            if last >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    bound: self.n,
                });
            }
        }
        let m = set.len();
        let idx = set.as_slice();
        let mut s = DenseMatrix::zeros(m);
        for q in 0..m {
            for p in 0..=q {
                let v = self.get(idx[p], idx[q]).unwrap_or(0.0);
                s.set(p, q, v);
                s.set(q, p, v);
            }
        }
        Ok(s)
    }

    /// Symmetric diagonal scaling `D^{-1/2} A D^{-1/2}`.
    ///
    /// Returns the scaled matrix and `d` with `d_i = sqrt(a_ii)`. The
    /// scaled diagonal is set to exactly `1.0`.
    pub fn jacobi_scale(&self) -> Result<(SymSparseMatrix, Vec<f64>)> {
        let diag = self.diagonal();
        if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::NonPositiveDiagonal { index, value });
        }
        let d: Vec<f64> = diag.iter().map(|v| v.sqrt()).collect();
        let mut values = self.values.clone();
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[p];
                values[p] = if i == j {
                    1.0
                } else {
                    self.values[p] / (d[i] * d[j])
                };
            }
        }
        let scaled = SymSparseMatrix {
            n: self.n,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values,
        };
        Ok((scaled, d))
    }
}

/// Leading `dim x dim` principal block of a [`SymSparseMatrix`].
///
/// `dim == n` gives the whole matrix.
#[derive(Debug, Clone, Copy)]
pub struct BlockView<'a> {
    matrix: &'a SymSparseMatrix,
    dim: usize,
}

impl<'a> BlockView<'a> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &'a SymSparseMatrix {
        self.matrix
    }

    /// Column `j` restricted to rows `< dim`. `j` itself may lie outside
    /// the block (this is how bordering columns are read).
    pub fn column(&self, j: usize) -> (&'a [usize], &'a [f64]) {
        let (rows, vals) = self.matrix.column(j);
        let end = if self.dim == self.matrix.n {
            rows.len()
        } else {
            rows.partition_point(|&r| r < self.dim)
        };
        (&rows[..end], &vals[..end])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.matrix.get(i, j).unwrap_or(0.0)
    }

    pub fn diag(&self, j: usize) -> f64 {
        self.get(j, j)
    }
}

/// Sparse vector of logical length `len` with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    len: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new(len: usize) -> Self {
        SparseVector {
            len,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from unordered pairs; duplicates are summed and zeros dropped.
    pub fn from_pairs<I>(len: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut pairs: Vec<(usize, f64)> = pairs.into_iter().collect();
        if let Some(&(index, _)) = pairs.iter().find(|(i, _)| *i >= len) {
            return Err(Error::IndexOutOfRange { index, bound: len });
        }
        pairs.sort_by_key(|&(i, _)| i);
        let mut v = SparseVector::new(len);
        for (i, x) in pairs {
            if v.indices.last() == Some(&i) {
                *v.values.last_mut().expect("entry pushed") += x;
            } else {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        v.compact();
        Ok(v)
    }

    pub fn from_dense(x: &[f64]) -> Self {
        let mut v = SparseVector::new(x.len());
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                v.indices.push(i);
                v.values.push(xi);
            }
        }
        v
    }

    fn compact(&mut self) {
        let mut keep = 0;
        for p in 0..self.indices.len() {
            if self.values[p] != 0.0 {
                self.indices[keep] = self.indices[p];
                self.values[keep] = self.values[p];
                keep += 1;
            }
        }
        self.indices.truncate(keep);
        self.values.truncate(keep);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, i: usize) -> f64 {
        match self.indices.binary_search(&i) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    /// `x_i += delta`, inserting `i` into the pattern when absent.
    pub fn add_at(&mut self, i: usize, delta: f64) {
        debug_assert!(i < self.len);
        match self.indices.binary_search(&i) {
            Ok(p) => self.values[p] += delta,
            Err(p) => {
                self.indices.insert(p, i);
                self.values.insert(p, delta);
            }
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.len];
        for (i, v) in self.iter() {
            x[i] = v;
        }
        x
    }
}

/// Strictly increasing set of distinct 0-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Sorts the indices; duplicates are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "duplicate index {} in index set",
                w[0]
            )));
        }
        Ok(IndexSet(indices))
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        IndexSet(indices)
    }

    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }
}
