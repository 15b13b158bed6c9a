#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod complexstruct;
pub mod error;
pub mod expr;
#[cfg(test)]
pub(crate) mod fixtures;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod oneill;
pub mod report;
pub mod scenarios;
pub mod semi_invariant;
pub mod submersion;

pub use error::{Error, Result};
