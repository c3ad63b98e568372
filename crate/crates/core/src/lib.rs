//! Exact-arithmetic checks for nilpotent matrix algebras, iterated
//! commutators, and differential polynomial rings over them.

pub mod cli;
pub mod commcalc;
pub mod error;
pub mod exactnum;
pub mod harness;
pub mod linalg;
pub mod nilalg;
pub mod orepoly;
pub mod sample;

pub use error::{Error, Result};
pub use exactnum::{Field, Scalar};
pub use linalg::{Flag, Matrix, Subspace};
pub use nilalg::{MatrixAlgebra, Nilpotency};
