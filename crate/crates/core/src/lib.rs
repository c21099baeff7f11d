//! Nonparametric inference on the fairness of a data-generating process.
//!
//! The crate estimates demographic parity, equal opportunity (both the
//! thresholded and the probabilistic forms), and the conditional mutual
//! information between an outcome `Y` and a group indicator `G` given
//! covariates `X`. Each estimator solves the empirical mean of its efficient
//! influence function for zero on an evaluation split, with nuisance models
//! fitted on a disjoint training split, and reports a Wald interval.
//!
//! Module map:
//!
//! - [`data`] and [`inference`]: datasets, sample splitting, estimate results
//!   and Wald intervals.
//! - [`learners`]: plug-in conditional-probability models.
//! - [`estimators`]: the fairness and CMI estimators and the naive baselines.
//! - [`sim`]: simulation designs, ground-truth oracles and coverage studies.
//! - [`importance`]: permutation-sampled Shapley attributions of a metric.

pub mod data;
pub mod error;
pub mod estimators;
pub mod importance;
pub mod inference;
pub mod learners;
pub mod rng;
pub mod sim;

pub use data::{split_sample, Dataset, FeatureSource, SplitPair};
pub use error::{Error, Result};
pub use inference::{wald_interval, EstimateResult, MetricId, WaldInterval};
