//! Inductive (C,F) towers: the two recipes, cocycle generators, exact
//! validation, cylinder measures and rung arithmetic.

mod measure;
mod text;
mod tower;
mod validate;

pub use measure::*;
pub use text::{ap_blocks, from_text, to_text};
pub use tower::*;
pub use validate::*;
