//! Finite-dimensional unitary analogues: Γ-invariant tensor restrictions,
//! multiplicity functions and the symmetric-polynomial algebra behind them.

mod algebra;
mod perm;
mod tensor;
mod unitary;

pub use algebra::*;
pub use perm::*;
pub use tensor::*;
pub use unitary::*;
