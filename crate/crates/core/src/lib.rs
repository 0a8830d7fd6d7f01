#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod measure;
pub mod minors;
pub mod sampling;

pub use error::{Error, Result};
