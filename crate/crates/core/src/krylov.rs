//! Conjugate gradient with an SPD preconditioner.
//!
//! Preconditioning with `M = U D⁻¹ Uᵀ` generates the same iterates as plain
//! CG on the split system `(D^{-1/2} Uᵀ) A (U D^{-1/2})`, but needs neither
//! square roots of `D` nor an extra triangular sweep per iteration.
//!
//! The default stopping test is `||b - A x_i||_2 / ||b||_2 < tol` on the
//! true residual, recomputed every iteration.

use std::time::{Duration, Instant};

use crate::aib::FactorizedInverse;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::SymSparseMatrix;

/// Square operator `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for SymSparseMatrix {
    fn dim(&self) -> usize {
        SymSparseMatrix::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y).expect("dimensions checked by the solver");
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        DenseMatrix::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// `z = M r` for an SPD approximation `M ≈ A⁻¹`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// `z_i = r_i / a_ii`.
#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

pub fn jacobi_preconditioner(a: &SymSparseMatrix) -> Result<JacobiPreconditioner> {
    let diag = a.diagonal();
    if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveDiagonal { index, value });
    }
    Ok(JacobiPreconditioner {
        inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
    })
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

impl Preconditioner for FactorizedInverse {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.apply_into(r, z).expect("dimensions checked by the solver");
    }
}

/// Adapts a closure `|r, z| ...` into a [`Preconditioner`].
pub struct FnPreconditioner<F>(pub F);

impl<F: Fn(&[f64], &mut [f64])> Preconditioner for FnPreconditioner<F> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        (self.0)(r, z)
    }
}

/// Residual used by the stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualCheck {
    /// Recompute `b - A x` each iteration (one extra matvec).
    #[default]
    True,
    /// Use the recurrence residual.
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tol: f64,
    pub maxit: usize,
    pub residual_check: ResidualCheck,
    /// Record every `history_stride`-th iteration. Iteration 0 and the last
    /// iteration are always recorded.
    pub history_stride: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-8,
            maxit: 10_000,
            residual_check: ResidualCheck::True,
            history_stride: 1,
        }
    }
}

impl CgOptions {
    pub fn new(tol: f64, maxit: usize) -> Self {
        CgOptions {
            tol,
            maxit,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `(iteration, ||b - A x_i|| / ||b||)`, starting with the initial guess.
    pub history: Vec<(usize, f64)>,
    pub precond_time: Duration,
    pub total_time: Duration,
}

impl SolveOutcome {
    pub fn final_relres(&self) -> f64 {
        self.history.last().map(|&(_, r)| r).unwrap_or(f64::NAN)
    }
}

pub fn cg<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &CgOptions,
) -> Result<SolveOutcome> {
    pcg(a, b, &IdentityPreconditioner, x0, opts)
}

pub fn pcg<A, M>(a: &A, b: &[f64], m: &M, x0: Option<&[f64]>, opts: &CgOptions) -> Result<SolveOutcome>
where
    A: LinearOperator + ?Sized,
    M: Preconditioner + ?Sized,
{
    pcg_observed(a, b, m, x0, opts, |_, _| {})
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// [`pcg`] calling `observer(i, x_i)` for every iterate, starting at `i = 0`.
pub fn pcg_observed<A, M, F>(
    a: &A,
    b: &[f64],
    m: &M,
    x0: Option<&[f64]>,
    opts: &CgOptions,
    mut observer: F,
) -> Result<SolveOutcome>
where
    A: LinearOperator + ?Sized,
    M: Preconditioner + ?Sized,
    F: FnMut(usize, &[f64]),
{
    let start = Instant::now();
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", opts.tol)));
    }
    if opts.maxit == 0 {
        return Err(Error::InvalidParameter("maxit must be >= 1".into()));
    }
    let stride = opts.history_stride.max(1);
    let mut x = match x0 {
        Some(x0) if x0.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x0.len(),
            })
        }
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };

    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        observer(0, &x);
        return Ok(SolveOutcome {
            x,
            iterations: 0,
            converged: true,
            history: vec![(0, 0.0)],
            precond_time: Duration::ZERO,
            total_time: start.elapsed(),
        });
    }

    let mut q = vec![0.0; n];
    a.apply(&x, &mut q);
    let mut r: Vec<f64> = b.iter().zip(&q).map(|(bi, qi)| bi - qi).collect();
    let mut relres = norm(&r) / b_norm;
    let mut history = vec![(0, relres)];
    observer(0, &x);

    let mut precond_time = Duration::ZERO;
    let mut z = vec![0.0; n];
    let mut converged = relres < opts.tol;
    let mut iterations = 0;

    if !converged {
        let t = Instant::now();
        m.apply(&r, &mut z);
        precond_time += t.elapsed();
        let mut rz = dot(&r, &z);
        if !(rz > 0.0) {
            return Err(Error::PreconditionerNotSpd {
                iteration: 0,
                value: rz,
            });
        }
        let mut p = z.clone();

        for it in 1..=opts.maxit {
            a.apply(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                return Err(Error::NotSpd(format!("pᵀAp = {pq} at iteration {it}")));
            }
            let alpha = rz / pq;
            for ((xi, ri), (pi, qi)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&q)) {
                *xi += alpha * pi;
                *ri -= alpha * qi;
            }
            relres = match opts.residual_check {
                ResidualCheck::Recursive => norm(&r) / b_norm,
                ResidualCheck::True => {
                    a.apply(&x, &mut q);
                    let s: f64 = b.iter().zip(&q).map(|(bi, qi)| (bi - qi) * (bi - qi)).sum();
                    s.sqrt() / b_norm
                }
            };
            iterations = it;
            converged = relres < opts.tol;
            if it % stride == 0 || converged || it == opts.maxit {
                history.push((it, relres));
            }
            observer(it, &x);
            if converged {
                break;
            }

            let t = Instant::now();
            m.apply(&r, &mut z);
            precond_time += t.elapsed();
            let rz_next = dot(&r, &z);
            if !(rz_next > 0.0) {
                return Err(Error::PreconditionerNotSpd {
                    iteration: it,
                    value: rz_next,
                });
            }
            let beta = rz_next / rz;
            rz = rz_next;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
    }

    Ok(SolveOutcome {
        x,
        iterations,
        converged,
        history,
        precond_time,
        total_time: start.elapsed(),
    })
}
