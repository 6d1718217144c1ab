//! Exact finite models of rank-one towers, cocycle skew products and the
//! associated spectral multiplicity computations.

pub mod cf;
pub mod cocycle;
pub mod cyclo;
pub mod error;
pub mod exact;
pub mod group;
pub mod koopman;
pub mod pipeline;
pub mod recurrence;
pub mod spectra;

pub use error::{Error, Result};
