//! Reduced-order modeling with hyper-reduction: POD bases, sample-point
//! selection (S-optimal and oversampled DEIM), gappy reconstruction,
//! a 1-D inviscid Burgers full-order model and Galerkin/LSPG ROMs.

// Negated comparisons such as `!(x > 0.0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod burgers;
pub mod error;
pub mod hyperreduction;
pub mod linalg;
pub mod model;
pub mod rom;
pub mod sampling;
pub mod snapshots;

pub use error::{Error, Result};
