// `!(x <= tol)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod equivalence;
pub mod error;
pub mod family;
pub mod group;
pub mod numkernel;
pub mod special;

pub use error::{Error, Result};
