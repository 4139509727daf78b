//! Kolmogorov–Nagumo mean entropies, conditional entropies and generalized
//! g-vulnerabilities on finite alphabets, with property checkers for
//! conditioning-reduces-entropy and the data-processing inequality.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cond_entropies;
pub mod entropies;
pub mod error;
pub mod frameworks;
pub mod kn_mean;
pub mod measure;
pub mod prob;
pub mod properties;
pub mod simplex;
pub mod syntax;
pub mod vulnerability;

pub use error::{Error, Result};
