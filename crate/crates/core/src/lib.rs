//! Predictability-aware training for small time series models.
//!
//! Per-sample losses are bucketed by rank and reweighted so that
//! low-loss (predictable) samples dominate the gradient, with the bucket
//! structure refined in stages over training. An optional peer model can
//! supply the bucket assignment for the other model.

// Negated float comparisons below are NaN-rejecting checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod datasets;
pub mod error;
pub mod metrics;
pub mod models;
pub mod numeric;
pub mod predictability;
pub mod trainer;

pub use error::{AptfError, Result};
pub use numeric::{argsort_ascending, Matrix, Rng};
