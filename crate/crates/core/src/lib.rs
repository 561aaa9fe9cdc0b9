#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the range checks

pub mod cli;
pub mod error;
pub mod ldp;
pub mod linalg;
pub mod lpp;
pub mod mp;
pub mod quadrature;
pub mod rates;
pub mod rmt;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
