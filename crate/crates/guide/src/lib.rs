//! The `sparse-aib` guide. Each module is one chapter of `book/`, so the
//! snippets in the book are compiled and run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/storage.md")]
pub mod storage {}

#[doc = include_str!("../../../book/src/sparse_solve.md")]
pub mod sparse_solve {}

#[doc = include_str!("../../../book/src/bordering.md")]
pub mod bordering {}

#[doc = include_str!("../../../book/src/pcg.md")]
pub mod pcg {}

#[doc = include_str!("../../../book/src/matrix_market.md")]
pub mod matrix_market {}

#[doc = include_str!("../../../book/src/benchmarks.md")]
pub mod benchmarks {}
