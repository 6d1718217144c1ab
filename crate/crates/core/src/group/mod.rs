//! Finite abelian groups, automorphisms, characters and multiplicity sets.

mod catalog;
mod orbits;
mod types;

pub use catalog::*;
pub use orbits::*;
pub use types::*;
