//! Datasets of covariates `X`, a binary group `G` and a binary outcome `Y`,
//! and seeded train/evaluation splitting.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A named block of feature columns that originate from one input variable
/// (a numeric column, or all one-hot columns of a categorical).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSource {
    pub name: String,
    pub columns: Vec<usize>,
}

/// Covariates, group and outcome for `n` observations.
///
/// Immutable after construction; all rows are complete and finite, group and
/// outcome are 0/1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    group: Vec<u8>,
    outcome: Vec<u8>,
    feature_names: Vec<String>,
    sources: Vec<FeatureSource>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        group: Vec<u8>,
        outcome: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let sources = feature_names
            .iter()
            .enumerate()
            .map(|(j, name)| FeatureSource { name: name.clone(), columns: vec![j] })
            .collect();
        Self::with_sources(features, group, outcome, feature_names, sources)
    }

    /// Like [`Dataset::new`] but with an explicit grouping of columns into
    /// source variables. Every column must belong to exactly one source.
    pub fn with_sources(
        features: Array2<f64>,
        group: Vec<u8>,
        outcome: Vec<u8>,
        feature_names: Vec<String>,
        sources: Vec<FeatureSource>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!("need n >= 1 and d >= 1, got {n}x{d}")));
        }
        if group.len() != n || outcome.len() != n {
            return Err(Error::InvalidDataset(format!(
                "length mismatch: features {n}, group {}, outcome {}",
                group.len(),
                outcome.len()
            )));
        }
        if feature_names.len() != d {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {d} columns",
                feature_names.len()
            )));
        }
        if let Some(&v) = group.iter().chain(outcome.iter()).find(|&&v| v > 1) {
            return Err(Error::NonBinaryLabels(v as usize));
        }
        for ((row, column), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row, column });
            }
        }
        let mut seen = vec![false; d];
        for s in &sources {
            for &c in &s.columns {
                if c >= d || seen[c] {
                    return Err(Error::InvalidDataset(format!(
                        "feature source '{}' references column {c} twice or out of range",
                        s.name
                    )));
                }
                seen[c] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidDataset("a feature column belongs to no source".into()));
        }
        Ok(Self { features, group, outcome, feature_names, sources })
    }

    pub fn n(&self) -> usize {
        self.group.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn group(&self) -> &[u8] {
        &self.group
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sources(&self) -> &[FeatureSource] {
        &self.sources
    }

    pub fn count_group(&self, g: u8) -> usize {
        self.group.iter().filter(|&&v| v == g).count()
    }

    pub fn count_outcome(&self, y: u8) -> usize {
        self.outcome.iter().filter(|&&v| v == y).count()
    }

    /// Rows in the given order (duplicates allowed).
    pub fn take_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            group: rows.iter().map(|&i| self.group[i]).collect(),
            outcome: rows.iter().map(|&i| self.outcome[i]).collect(),
            feature_names: self.feature_names.clone(),
            sources: self.sources.clone(),
        }
    }

    /// Keeps only the columns of the listed sources, in the order given.
    pub fn select_sources(&self, source_idx: &[usize]) -> Result<Dataset> {
        let mut columns = Vec::new();
        let mut sources = Vec::with_capacity(source_idx.len());
        for &s in source_idx {
            let src = self.sources.get(s).ok_or_else(|| {
                Error::InvalidArgument(format!("source index {s} out of range"))
            })?;
            let start = columns.len();
            columns.extend_from_slice(&src.columns);
            sources.push(FeatureSource {
                name: src.name.clone(),
                columns: (start..columns.len()).collect(),
            });
        }
        if columns.is_empty() {
            return Err(Error::InvalidArgument("empty feature subset".into()));
        }
        Dataset::with_sources(
            self.features.select(Axis(1), &columns),
            self.group.clone(),
            self.outcome.clone(),
            columns.iter().map(|&c| self.feature_names[c].clone()).collect(),
            sources,
        )
    }

    /// The same data with `G` relabelled to `1 - G`.
    pub fn flip_group(&self) -> Dataset {
        Dataset { group: self.group.iter().map(|g| 1 - g).collect(), ..self.clone() }
    }
}

/// Which label margins both halves of a split must contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitCheck {
    #[default]
    Group,
    GroupAndOutcome,
}

/// A training split for nuisance fitting and a disjoint evaluation split.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub eval: Dataset,
    pub seed: u64,
    pub ratio: f64,
    pub train_rows: Vec<usize>,
    pub eval_rows: Vec<usize>,
}

impl SplitPair {
    /// The same split with both halves restricted to a subset of sources.
    pub fn select_sources(&self, source_idx: &[usize]) -> Result<SplitPair> {
        Ok(SplitPair {
            train: self.train.select_sources(source_idx)?,
            eval: self.eval.select_sources(source_idx)?,
            ..self.clone()
        })
    }

    pub fn flip_group(&self) -> SplitPair {
        SplitPair { train: self.train.flip_group(), eval: self.eval.flip_group(), ..self.clone() }
    }
}

/// Uniformly random partition into `floor(ratio * n)` training rows and the
/// remainder for evaluation. Both halves must contain both group values.
pub fn split_sample(data: &Dataset, ratio: f64, seed: u64) -> Result<SplitPair> {
    split_sample_checked(data, ratio, seed, SplitCheck::Group)
}

pub fn split_sample_checked(
    data: &Dataset,
    ratio: f64,
    seed: u64,
    check: SplitCheck,
) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} not in (0,1)")));
    }
    let n = data.n();
    if (n as f64) * ratio.min(1.0 - ratio) < 2.0 {
        return Err(Error::InsufficientData {
            required: (2.0 / ratio.min(1.0 - ratio)).ceil() as usize,
            actual: n,
        });
    }
    // The epsilon keeps values like 0.29 * 100 from flooring to 28.
    let n_train = ((n as f64) * ratio + 1e-9).floor() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::rng_from_seed(seed));
    let (train_rows, eval_rows) = idx.split_at(n_train);
    let train = data.take_rows(train_rows);
    let eval = data.take_rows(eval_rows);
    for (name, part) in [("train", &train), ("eval", &eval)] {
        for g in 0..=1u8 {
            if part.count_group(g) == 0 {
                return Err(if name == "eval" {
                    Error::EmptyGroup { group: g }
                } else {
                    Error::DegenerateSplit(format!("{name} split has no rows with G={g}"))
                });
            }
            if check == SplitCheck::GroupAndOutcome && part.count_outcome(g) == 0 {
                return Err(Error::DegenerateSplit(format!("{name} split has no rows with Y={g}")));
            }
        }
    }
    Ok(SplitPair {
        train,
        eval,
        seed,
        ratio,
        train_rows: train_rows.to_vec(),
        eval_rows: eval_rows.to_vec(),
    })
}
