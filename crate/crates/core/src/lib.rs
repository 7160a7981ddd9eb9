#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplifier;
pub mod config;
pub mod error;
pub mod fibre;
pub mod gn;
pub mod isrs;
pub mod optimizer;
pub mod quadrature;
pub mod spectrum;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
