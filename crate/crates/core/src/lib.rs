//! Paired significance tests for IR-style evaluation scores and a
//! copula-based stochastic simulator for measuring their actual Type I,
//! Type II and Type III error rates.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod copulas;
pub mod error;
pub mod experiments;
pub mod io;
pub mod margins;
pub mod optimize;
pub mod paired;
pub mod rng;
pub mod simulation;
pub mod special;

pub use error::{Error, Result};
