use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use std::fmt;

use super::config::LearnerConfig;
use super::gbt::GbtClassifier;
use super::isotonic::IsotonicMap;
use super::logistic::LogisticModel;

/// Lower bound applied to every predicted class probability, so downstream
/// logarithms and inverse weights stay finite.
pub const PROB_FLOOR: f64 = 1e-6;

/// A fitted conditional class-probability function `x ↦ P(class | X = x)`.
///
/// Every output row lies in the probability simplex. Implementations must be
/// deterministic.
pub trait ProbabilityModel: Send + Sync + fmt::Debug {
    fn n_classes(&self) -> usize;

    /// Writes the class probabilities for one covariate row into `out`.
    fn predict_row(&self, row: ArrayView1<'_, f64>, out: &mut [f64]);

    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let k = self.n_classes();
        let mut out = Array2::zeros((x.nrows(), k));
        let mut buf = vec![0.0; k];
        for (i, row) in x.rows().into_iter().enumerate() {
            self.predict_row(row, &mut buf);
            for (c, v) in buf.iter().enumerate() {
                out[[i, c]] = *v;
            }
        }
        out
    }

    /// Probability of class 1, for binary models.
    fn predict_positive(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let mut buf = vec![0.0; self.n_classes()];
        x.rows()
            .into_iter()
            .map(|row| {
                self.predict_row(row, &mut buf);
                buf[1]
            })
            .collect()
    }

    fn describe(&self) -> String {
        format!("{self:?}")
    }
}

/// Floors every entry at [`PROB_FLOOR`] and rescales to sum to one.
pub fn normalize_with_floor(p: &mut [f64]) {
    for v in p.iter_mut() {
        if !v.is_finite() || *v < PROB_FLOOR {
            *v = PROB_FLOOR;
        }
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub learner: String,
    /// Mean held-out log-loss, or `None` if the candidate failed on a fold.
    pub cv_log_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Provenance of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub learner: String,
    pub config: LearnerConfig,
    pub n_train: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub selection: Vec<CandidateScore>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub(crate) enum Predictor {
    Constant(Vec<f64>),
    Logistic(LogisticModel),
    Gbt(GbtClassifier),
    Calibrated { base: Box<Predictor>, maps: Vec<IsotonicMap> },
}

impl Predictor {
    /// Class probabilities before the final floor/renormalization.
    pub(crate) fn raw_row(&self, row: ArrayView1<'_, f64>, out: &mut [f64]) {
        match self {
            Predictor::Constant(p) => out.copy_from_slice(p),
            Predictor::Logistic(m) => m.predict_row(row, out),
            Predictor::Gbt(m) => m.predict_row(row, out),
            Predictor::Calibrated { base, maps } => {
                base.raw_row(row, out);
                normalize_with_floor(out);
                if out.len() == 2 {
                    out[1] = maps[0].predict(out[1]).clamp(0.0, 1.0);
                    out[0] = 1.0 - out[1];
                } else {
                    for (v, m) in out.iter_mut().zip(maps) {
                        *v = m.predict(*v);
                    }
                }
            }
        }
    }
}

/// A model produced by one of the crate's learners.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub(crate) predictor: Predictor,
    n_classes: usize,
    pub info: ModelInfo,
}

impl FittedModel {
    pub(crate) fn new(predictor: Predictor, n_classes: usize, info: ModelInfo) -> Self {
        Self { predictor, n_classes, info }
    }

    /// Training log-loss after each boosting round, for boosted binary models.
    pub fn boosting_losses(&self) -> Option<&[f64]> {
        match &self.predictor {
            Predictor::Gbt(m) => m.train_losses(),
            _ => None,
        }
    }

    /// Coefficients on the original covariate scale, for logistic models:
    /// one `(intercept, slopes)` pair per non-reference class.
    pub fn logistic_coefficients(&self) -> Option<Vec<(f64, Vec<f64>)>> {
        match &self.predictor {
            Predictor::Logistic(m) => Some(m.coefficients()),
            _ => None,
        }
    }
}

impl ProbabilityModel for FittedModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_row(&self, row: ArrayView1<'_, f64>, out: &mut [f64]) {
        self.predictor.raw_row(row, out);
        normalize_with_floor(out);
    }

    fn describe(&self) -> String {
        self.info.learner.clone()
    }
}

/// Wraps a closure as a [`ProbabilityModel`]; used for known-truth and
/// deliberately wrong nuisance functions.
pub struct FnModel<F> {
    n_classes: usize,
    label: String,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(ArrayView1<'_, f64>, &mut [f64]) + Send + Sync,
{
    pub fn new(n_classes: usize, label: impl Into<String>, f: F) -> Self {
        Self { n_classes, label: label.into(), f }
    }
}

/// A binary model from a function returning `P(class 1 | x)`.
pub fn binary_fn<P>(label: impl Into<String>, p: P) -> FnModel<impl Fn(ArrayView1<'_, f64>, &mut [f64]) + Send + Sync>
where
    P: Fn(ArrayView1<'_, f64>) -> f64 + Send + Sync,
{
    FnModel::new(2, label, move |row, out: &mut [f64]| {
        let q = p(row);
        out[0] = 1.0 - q;
        out[1] = q;
    })
}

impl<F> fmt::Debug for FnModel<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnModel({})", self.label)
    }
}

impl<F> ProbabilityModel for FnModel<F>
where
    F: Fn(ArrayView1<'_, f64>, &mut [f64]) + Send + Sync,
{
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_row(&self, row: ArrayView1<'_, f64>, out: &mut [f64]) {
        (self.f)(row, out);
        normalize_with_floor(out);
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}
