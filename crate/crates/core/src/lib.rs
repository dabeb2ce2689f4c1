//! Near-field imaging of a locally rough interface between two homogeneous
//! half-planes, possibly hiding a sound-soft obstacle below it.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod forward;
pub mod geometry;
pub mod greens;
pub mod harness;
pub mod inversion;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
