//! Small dense reference routines.
//!
//! These exist to check the sparse algorithms by brute force on small
//! instances. The factorizations refuse to run above [`ORACLE_MAX_DIM`].

use crate::error::{Error, Result};

pub const ORACLE_MAX_DIM: usize = 200;

/// Square row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square matrix");
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        Self::from_fn(self.n, |i, j| self.get(i, j) - other.get(i, j))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// `A = L diag(pivots) Lᵀ` with unit lower triangular `L`.
#[derive(Debug, Clone)]
pub struct Ldlt {
    pub l: DenseMatrix,
    pub pivots: Vec<f64>,
}

impl Ldlt {
    /// Solves `A x = b` with the stored factors.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.dim();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.l.get(i, k) * y[k]).sum();
            y[i] -= s;
        }
        for (yi, d) in y.iter_mut().zip(&self.pivots) {
            *yi /= d;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.l.get(k, i) * y[k]).sum();
            y[i] -= s;
        }
        y
    }
}

fn check_oracle_dim(n: usize) {
    assert!(
        n <= ORACLE_MAX_DIM,
        "dense oracle is limited to n <= {ORACLE_MAX_DIM}, got {n}"
    );
}

/// Dense LDLᵀ without pivoting. Fails on the first pivot `<= 0`.
pub fn dense_ldlt(a: &DenseMatrix) -> Result<Ldlt> {
    let n = a.dim();
    check_oracle_dim(n);
    let mut l = DenseMatrix::identity(n);
    let mut pivots = vec![0.0; n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k) * pivots[k];
        }
        if !(d > 0.0) {
            return Err(Error::NotSpd(format!("pivot {j} is {d}")));
        }
        pivots[j] = d;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k) * pivots[k];
            }
            l.set(i, j, s / d);
        }
    }
    Ok(Ldlt { l, pivots })
}

pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Ok(dense_ldlt(a)?.solve(b))
}

/// Explicit dense inverse, via one LDLᵀ solve per unit vector.
pub fn dense_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let f = dense_ldlt(a)?;
    let n = a.dim();
    let mut inv = DenseMatrix::zeros(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = f.solve(&e);
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
    }
    Ok(inv)
}

/// Exact inverse factor: unit upper triangular `U = L^{-T}` and `D` with
/// `Uᵀ A U = D`.
pub fn dense_inverse_factor(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    let Ldlt { l, pivots } = dense_ldlt(a)?;
    let n = a.dim();
    // Invert unit lower L column by column (forward substitution on e_j).
    let mut linv = DenseMatrix::identity(n);
    for j in 0..n {
        for i in j + 1..n {
            let s: f64 = (j..i).map(|k| l.get(i, k) * linv.get(k, j)).sum();
            linv.set(i, j, -s);
        }
    }
    Ok((linv.transpose(), pivots))
}
