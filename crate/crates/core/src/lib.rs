#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod curvature;
pub mod error;
pub mod frac;
pub mod gamma;
pub mod json;
pub mod lattice;
pub mod markov;
pub mod numeric;
pub mod relaxation;
pub mod sampling;
pub mod semigroup;

pub use error::{Error, Result};
