#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Slow feature analysis with a rank-robust SVD training path, plus the
//! driven-logistic-map experiments that exercise it.

pub mod error;
pub mod experiment;
pub mod lab;
pub mod sfa;
pub mod spectra;

pub use error::{Result, SfaError};
