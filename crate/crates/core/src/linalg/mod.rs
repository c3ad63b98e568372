//! Exact dense linear algebra: matrices, canonical subspaces and flags.

mod matrix;
mod span;
mod subspace;

pub use matrix::{change_of_basis, Matrix};
pub use span::ReducedSpan;
pub use subspace::{common_preimage, preimage, Flag, Subspace};
