//! Factorized approximate inverse by bordering.
//!
//! For the leading blocks `A_{k+1} = [A_k v_k; v_kᵀ α_{k+1}]`, column `k+1`
//! of the unit upper triangular factor `U` is `[-z_k; 1]` where `z_k` is a
//! sparse approximate solution of `A_k z_k = v_k`. The pivot is
//!
//! ```text
//! δ_{k+1} = α_{k+1} - z_kᵀ (v_k + r_k),    r_k = v_k - A_k z_k
//! ```
//!
//! which stays positive for SPD `A` no matter how inexact `z_k` is. The
//! result satisfies `Uᵀ A U ≈ D`, so `M = U D⁻¹ Uᵀ ≈ A⁻¹` is an SPD
//! preconditioner.
//!
//! Columns depend only on `A`, so they are computed independently and in
//! parallel; assembly order is fixed, which makes the result identical for
//! any thread count.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::{SparseVector, SymSparseMatrix};
use crate::sparse_solve::{run_projection, Residual, Scratch, SparseResidual, SparseSolveParams};

/// `U` (unit upper triangular, by columns) and pivots `D` with `Uᵀ A U ≈ D`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedInverse {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    pivots: Vec<f64>,
    rho: f64,
}

/// One bordering step.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnResult {
    /// Approximate solution of `A_k z = v_k`, length `k`.
    pub z: SparseVector,
    /// `v_k - A_k z`, length `k`.
    pub residual: Vec<f64>,
    pub delta: f64,
}

#[derive(Debug)]
struct ColumnWorkspace {
    residual: SparseResidual,
    scratch: Scratch,
}

impl ColumnWorkspace {
    fn new(n: usize) -> Self {
        ColumnWorkspace {
            residual: SparseResidual::new(n),
            scratch: Scratch::default(),
        }
    }
}

/// Computes `z_k` and `δ_{k+1}` for leading block size `k` (`1 <= k < n`),
/// leaving `r_k` in the workspace.
fn border_column(
    a: &SymSparseMatrix,
    k: usize,
    params: &SparseSolveParams,
    ws: &mut ColumnWorkspace,
) -> Result<(SparseVector, f64)> {
    let block = a.leading_block(k);
    let (rows, vals) = block.column(k);
    ws.residual.load(rows, vals);
    let v_norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut z = SparseVector::new(k);
    run_projection(block, &mut ws.residual, v_norm, params, &mut z, &mut ws.scratch, |_| {})?;

    let alpha = a.get(k, k).expect("diagonal present");
    let correction: f64 = z
        .iter()
        .map(|(i, zi)| {
            let vi = a.get(i, k).unwrap_or(0.0);
            zi * (vi + ws.residual.value(i))
        })
        .sum();
    let delta = alpha - correction;
    if !(delta > 0.0) {
        return Err(Error::Breakdown { column: k, delta });
    }
    Ok((z, delta))
}

/// Bordering step for leading block size `k`, i.e. column `k` (0-based) of `U`.
pub fn build_column(a: &SymSparseMatrix, k: usize, params: &SparseSolveParams) -> Result<ColumnResult> {
    params.validate()?;
    if k == 0 || k >= a.dim() {
        return Err(Error::IndexOutOfRange {
            index: k,
            bound: a.dim(),
        });
    }
    let mut ws = ColumnWorkspace::new(k);
    let (z, delta) = border_column(a, k, params, &mut ws)?;
    Ok(ColumnResult {
        z,
        residual: ws.residual.to_dense(k),
        delta,
    })
}

/// Builds the factors using rayon's global pool.
pub fn build(a: &SymSparseMatrix, params: &SparseSolveParams) -> Result<FactorizedInverse> {
    params.validate()?;
    let n = a.dim();
    if n == 0 {
        return Ok(assemble(a, Vec::new()));
    }
    let chunk = (n / (rayon::current_num_threads() * 8)).max(64);
    let columns: Vec<Result<(SparseVector, f64)>> = (1..n)
        .into_par_iter()
        .with_min_len(chunk)
        .map_init(
            || ColumnWorkspace::new(n),
            |ws, k| border_column(a, k, params, ws),
        )
        .collect();
    finish(a, columns)
}

/// Builds the factors on the calling thread.
pub fn build_sequential(a: &SymSparseMatrix, params: &SparseSolveParams) -> Result<FactorizedInverse> {
    params.validate()?;
    let n = a.dim();
    let mut ws = ColumnWorkspace::new(n);
    let columns: Vec<_> = (1..n).map(|k| border_column(a, k, params, &mut ws)).collect();
    finish(a, columns)
}

/// Builds the factors on a dedicated pool of `threads` workers. `1` means
/// [`build_sequential`], `0` means rayon's global pool.
pub fn build_with_threads(
    a: &SymSparseMatrix,
    params: &SparseSolveParams,
    threads: usize,
) -> Result<FactorizedInverse> {
    match threads {
        0 => return build(a, params),
        1 => return build_sequential(a, params),
        _ => {}
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| build(a, params))
}

fn finish(a: &SymSparseMatrix, columns: Vec<Result<(SparseVector, f64)>>) -> Result<FactorizedInverse> {
    // Columns are in order, so the first error is the lowest failing column.
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(assemble(a, columns))
}

fn assemble(a: &SymSparseMatrix, columns: Vec<(SparseVector, f64)>) -> FactorizedInverse {
    let n = a.dim();
    let nnz = n + columns.iter().map(|(z, _)| z.nnz()).sum::<usize>();
    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut row_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    let mut pivots = Vec::with_capacity(n);
    col_ptr.push(0);
    if n > 0 {
        row_idx.push(0);
        values.push(1.0);
        col_ptr.push(1);
        pivots.push(a.get(0, 0).expect("diagonal present"));
    }
    for (k, (z, delta)) in columns.into_iter().enumerate() {
        let k = k + 1;
        for (i, zi) in z.iter() {
            row_idx.push(i);
            values.push(-zi);
        }
        row_idx.push(k);
        values.push(1.0);
        col_ptr.push(row_idx.len());
        pivots.push(delta);
    }
    let rho = density(row_idx.len(), a);
    FactorizedInverse {
        n,
        col_ptr,
        row_idx,
        values,
        pivots,
        rho,
    }
}

/// `nnz(U) / nnz(triu(A))`, diagonals included in both counts.
fn density(u_nnz: usize, a: &SymSparseMatrix) -> f64 {
    if a.nnz_upper() == 0 {
        return 0.0;
    }
    u_nnz as f64 / a.nnz_upper() as f64
}

impl FactorizedInverse {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivots
    }

    /// Fill ratio `nnz(U) / nnz(triu(A))`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Stored entries of `U`, unit diagonal included.
    pub fn u_nnz(&self) -> usize {
        self.values.len()
    }

    /// Rows and values of column `j` of `U`; the last entry is the unit
    /// diagonal.
    pub fn u_column(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// Recomputes the fill ratio from the stored pattern of `U`.
    pub fn recompute_rho(&self, a: &SymSparseMatrix) -> f64 {
        density(self.u_nnz(), a)
    }

    /// Dense copy of `U` (tests and inspection of small problems).
    pub fn u_to_dense(&self) -> crate::dense::DenseMatrix {
        let mut u = crate::dense::DenseMatrix::zeros(self.n);
        for j in 0..self.n {
            let (rows, vals) = self.u_column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                u.set(i, j, v);
            }
        }
        u
    }

    /// `U D⁻¹ Uᵀ v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// `out = U D⁻¹ Uᵀ v`; `out` is overwritten.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: v.len(),
            });
        }
        if out.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: out.len(),
            });
        }
        // t = D⁻¹ Uᵀ v, stored in out.
        for j in 0..self.n {
            let (rows, vals) = self.u_column(j);
            let t: f64 = rows.iter().zip(vals).map(|(&i, &u)| u * v[i]).sum();
            out[j] = t / self.pivots[j];
        }
        // out = U t in place. Column j scatters into rows < j only, and out[j]
        // is changed only by later columns, so an ascending sweep reads t_j
        // before it is overwritten.
        for j in 0..self.n {
            let (rows, vals) = self.u_column(j);
            let tj = out[j];
            let (_, off_diag) = rows.split_last().expect("unit diagonal stored");
            for (&i, &u) in off_diag.iter().zip(vals) {
                out[i] += u * tj;
            }
        }
        Ok(())
    }

    /// Writes `U` as a general coordinate Matrix Market file (1-based).
    pub fn write_u_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.u_nnz())?;
        for j in 0..self.n {
            let (rows, vals) = self.u_column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }

    /// Writes the pivots one per line.
    pub fn write_pivots<W: Write>(&self, mut w: W) -> Result<()> {
        for d in &self.pivots {
            writeln!(w, "{d:.17e}")?;
        }
        Ok(())
    }
}
