//! Factorized sparse approximate inverse preconditioning for SPD systems.
//!
//! [`aib::build`] computes a unit upper triangular `U` and a positive
//! diagonal `D` with `Uᵀ A U ≈ D` by bordering: column `k+1` of `U` comes
//! from a sparse approximate solve with the leading `k x k` block, done by
//! the greedy coordinate projection in [`sparse_solve`]. The pivots stay
//! positive for any SPD input however loose the inner solves are, and
//! `U D⁻¹ Uᵀ` is applied inside preconditioned CG ([`krylov::pcg`]).
//!
//! ```
//! use sparse_aib::{aib, bench, krylov, SparseSolveParams};
//!
//! let a = bench::laplacian_2d(20, 20)?;
//! let (b, _) = bench::generate_rhs(&a, 1);
//! let m = aib::build(&a, &SparseSolveParams::default())?;
//! let out = krylov::pcg(&a, &b, &m, None, &krylov::CgOptions::default())?;
//! assert!(out.converged);
//! # Ok::<(), sparse_aib::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod aib;
pub mod bench;
pub mod dense;
pub mod error;
pub mod krylov;
pub mod mm;
pub mod sparse;
pub mod sparse_solve;

pub use aib::FactorizedInverse;
pub use error::{Error, Result};
pub use sparse::{IndexSet, SparseVector, SymSparseMatrix};
pub use sparse_solve::{SparseSolveParams, StopRule};
