//! Permutation-sampled Shapley attributions of an estimand to the source
//! variables of a dataset.
//!
//! Each sampled order adds sources one at a time; every prefix refits the
//! nuisance models on that subset of the training split and evaluates the
//! point estimate on the evaluation split. The empty prefix uses constant
//! learners.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SplitPair;
use crate::error::{Error, Result};
use crate::estimators::Estimand;
use crate::inference::MetricId;
use crate::rng;

pub const DEFAULT_PERMUTATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    pub contribution: f64,
    /// Monte Carlo standard error over completed permutations.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationFailure {
    pub permutation: usize,
    pub subset: Vec<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub metric: MetricId,
    pub n_permutations: usize,
    pub n_completed: usize,
    pub full_value: f64,
    pub empty_value: f64,
    pub features: Vec<FeatureImportance>,
    /// Largest `|Σ contributions − (full − empty)|` over completed permutations.
    pub max_telescoping_error: f64,
    pub failures: Vec<PermutationFailure>,
}

impl ImportanceReport {
    pub fn get(&self, name: &str) -> Option<&FeatureImportance> {
        self.features.iter().find(|f| f.name == name)
    }

    /// Feature names by decreasing absolute contribution.
    pub fn ranking(&self) -> Vec<&str> {
        let mut idx: Vec<&FeatureImportance> = self.features.iter().collect();
        idx.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()));
        idx.into_iter().map(|f| f.name.as_str()).collect()
    }
}

struct SubsetValues<'a> {
    split: &'a SplitPair,
    estimand: &'a Estimand,
    empty: f64,
    cache: Mutex<HashMap<Vec<usize>, f64>>,
}

impl SubsetValues<'_> {
    fn value(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Ok(self.empty);
        }
        let mut key = subset.to_vec();
        key.sort_unstable();
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = self.estimand.estimate(&self.split.select_sources(&key)?)?.point;
        self.cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }
}

/// Shapley contributions of each source variable of `split` to the point
/// estimate of `estimand`, averaged over `n_perms` random orders.
pub fn shapley_importance(split: &SplitPair, estimand: &Estimand, n_perms: usize, seed: u64) -> Result<ImportanceReport> {
    if n_perms == 0 {
        return Err(Error::InvalidArgument("n_perms must be at least 1".into()));
    }
    let sources = split.train.sources();
    let d = sources.len();
    let all: Vec<usize> = (0..d).collect();
    let empty = estimand.with_constant_learners().estimate(split)?.point;
    let values = SubsetValues { split, estimand, empty, cache: Mutex::new(HashMap::new()) };
    let full = values.value(&all)?;

    let runs: Vec<std::result::Result<Vec<f64>, PermutationFailure>> = (0..n_perms)
        .into_par_iter()
        .map(|p| {
            let mut order = all.clone();
            order.shuffle(&mut rng::stream(seed, &[rng::label_hash("permutation"), p as u64]));
            let mut contrib = vec![0.0; d];
            let mut prev = empty;
            for k in 1..=d {
                let v = values.value(&order[..k]).map_err(|e| PermutationFailure {
                    permutation: p,
                    subset: order[..k].iter().map(|&j| sources[j].name.clone()).collect(),
                    error: e.to_string(),
                })?;
                contrib[order[k - 1]] = v - prev;
                prev = v;
            }
            Ok(contrib)
        })
        .collect();

    let mut completed = Vec::new();
    let mut failures = Vec::new();
    for r in runs {
        match r {
            Ok(c) => completed.push(c),
            Err(f) => {
                log::warn!("permutation {} failed at {:?}: {}", f.permutation, f.subset, f.error);
                failures.push(f);
            }
        }
    }
    let m = completed.len();
    let max_telescoping_error = completed
        .iter()
        .map(|c| (c.iter().sum::<f64>() - (full - empty)).abs())
        .fold(0.0, f64::max);
    let features = (0..d)
        .map(|j| {
            let xs: Vec<f64> = completed.iter().map(|c| c[j]).collect();
            let mean = if m > 0 { xs.iter().sum::<f64>() / m as f64 } else { f64::NAN };
            let stderr = if m > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / ((m - 1) * m) as f64).sqrt()
            } else {
                f64::NAN
            };
            FeatureImportance { name: sources[j].name.clone(), contribution: mean, stderr }
        })
        .collect();
    Ok(ImportanceReport {
        metric: estimand.metric_id(),
        n_permutations: n_perms,
        n_completed: m,
        full_value: full,
        empty_value: empty,
        features,
        max_telescoping_error,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split_sample, Dataset};
    use crate::estimators::{MetricKind, MetricSpec};
    use crate::learners::LearnerConfig;
    use ndarray::Array2;

    fn toy(n: usize) -> SplitPair {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| ((i * (j + 3)) % 7) as f64);
        let g: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let y: Vec<u8> = (0..n).map(|i| u8::from((i * 3) % 7 > 2 || i % 5 == 0)).collect();
        let d = Dataset::new(x, g, y, vec!["a".into(), "b".into()]).unwrap();
        split_sample(&d, 0.5, 1).unwrap()
    }

    #[test]
    fn constant_learners_give_zero_importance() {
        let e = Estimand::Fairness(MetricSpec::parity(MetricKind::Traditional).with_learner(LearnerConfig::constant()));
        let r = shapley_importance(&toy(200), &e, 5, 0).unwrap();
        assert!(r.features.iter().all(|f| f.contribution == 0.0));
        assert_eq!(r.full_value, r.empty_value);
    }

    #[test]
    fn zero_permutations_rejected() {
        let e = Estimand::Fairness(MetricSpec::parity(MetricKind::Traditional));
        assert!(shapley_importance(&toy(100), &e, 0, 0).is_err());
    }
}
