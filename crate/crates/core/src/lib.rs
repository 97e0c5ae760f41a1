//! Kernel conditional quantile estimation for randomly left-truncated,
//! possibly dependent data.
//!
//! The estimator chain runs bottom-up:
//!
//! - [`kernels`]: the covariate kernel `K`, the response smoother `H` and
//!   bandwidth schedules.
//! - [`lynden_bell`]: the risk set `C_n`, the product-limit estimators
//!   `F_n`, `G_n` and the truncation probability `mu_n`.
//! - [`cond_quantile`]: the truncation-weighted conditional distribution
//!   function and its quantile inversion.
//! - [`datagen`]: a simulator for the truncation scheme with analytic
//!   oracles.
//! - [`harness`]: replicated Monte-Carlo experiments that measure the
//!   convergence rate of the estimators.

// `!(a < b)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cond_quantile;
pub mod datagen;
mod error;
pub mod harness;
pub mod kernels;
pub mod lynden_bell;
pub mod quadrature;
pub mod rng;
pub mod sample;
pub mod step_curve;

pub use cond_quantile::{CdfValue, ConditionalCdfEstimator, LocalCdf, QuantileQuery};
pub use datagen::{GeneratedDataset, TruncatedDataModel};
pub use error::{Error, Result};
pub use kernels::{BandwidthSchedule, KernelSpec, SmootherSpec};
pub use lynden_bell::TruncationEstimates;
pub use sample::{ObservedSample, Record};
pub use step_curve::StepCurve;
