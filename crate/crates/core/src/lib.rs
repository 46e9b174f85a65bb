//! Discrete spectra of Schrödinger operators with degenerate potentials.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bornopp;
pub mod eigensolve;
pub mod error;
pub mod expr;
pub mod grid;
pub mod par;
pub mod potential;
pub mod quad;
pub mod weyl;

pub use error::{Error, Result};
