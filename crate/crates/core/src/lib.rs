//! Finite-length sphere-packing lower bounds and random-coding upper bounds
//! on the block error probability of codes over symmetric memoryless channels.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod cli;
pub mod compare;
pub mod error;
pub mod numerics;
pub mod sp59;
pub mod sp67;

pub use error::{Error, Result};
