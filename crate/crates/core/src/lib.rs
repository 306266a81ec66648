//! Multivariate proper scoring rules, the forecasting models they are
//! compared on, and a Monte Carlo harness measuring how well each rule
//! separates a data generating process from misspecified alternatives.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod harness;
pub mod math;
pub mod metrics;
pub mod models;
pub mod panel;
pub mod rng;
pub mod scoring;

pub use models::{CalibratedModel, ModelError, ModelSpec};
pub use panel::{SeriesPanel, SummaryStats, SyntheticSpec};
pub use scoring::{ForecastEnsemble, MultivariateRule, ScoreValue};
