//! Plug-in nuisance learners for conditional class probabilities.
//!
//! Binary models estimate quantities such as `P(Y=1|X)` and `P(G=1|X)`;
//! the four-class joint model estimates `P(Y=y, G=g | X)` with class index
//! `2y + g` (see [`joint_class`]).

mod config;
mod gbt;
mod isotonic;
mod logistic;
mod metrics;
mod model;
mod select;

pub use config::{Algorithm, GbtParams, LearnerConfig, LogisticParams};
pub use isotonic::IsotonicMap;
pub use logistic::LogisticObjective;
pub use metrics::{expected_calibration_error, log_loss};
pub use model::{binary_fn, normalize_with_floor, CandidateScore, FittedModel, FnModel, ModelInfo, ProbabilityModel, PROB_FLOOR};
pub use select::cv_select;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;
use gbt::GbtClassifier;
use logistic::LogisticModel;
use model::Predictor;

/// Minimum number of training rows for any fit.
pub const MIN_TRAIN_ROWS: usize = 10;
/// Minimum number of rows in a calibration holdout.
pub const MIN_CALIBRATION_ROWS: usize = 50;

/// Joint class index of `(y, g)`.
pub fn joint_class(y: u8, g: u8) -> usize {
    2 * y as usize + g as usize
}

/// Fits `P(label = 1 | X)`.
pub fn fit_binary(x: ArrayView2<'_, f64>, labels: &[u8], config: &LearnerConfig) -> Result<FittedModel> {
    if let Some(&v) = labels.iter().find(|&&v| v > 1) {
        return Err(Error::NonBinaryLabels(v as usize));
    }
    let ones = labels.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == labels.len() {
        return Err(Error::SingleClassLabels { class: usize::from(ones > 0) });
    }
    let l: Vec<usize> = labels.iter().map(|&v| v as usize).collect();
    fit_classifier(x, &l, 2, config)
}

/// Fits the four-class joint distribution of `(Y, G)` given `X`.
///
/// Empty `(y, g)` cells are allowed; they are reported as warnings in the
/// model info and receive near-zero predicted mass.
pub fn fit_joint(x: ArrayView2<'_, f64>, y: &[u8], g: &[u8], config: &LearnerConfig) -> Result<FittedModel> {
    if y.len() != g.len() {
        return Err(Error::InvalidArgument("y and g lengths differ".into()));
    }
    if let Some(&v) = y.iter().chain(g).find(|&&v| v > 1) {
        return Err(Error::NonBinaryLabels(v as usize));
    }
    let labels: Vec<usize> = y.iter().zip(g).map(|(&a, &b)| joint_class(a, b)).collect();
    let mut counts = [0usize; 4];
    labels.iter().for_each(|&l| counts[l] += 1);
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::SingleClassLabels { class: labels.first().copied().unwrap_or(0) });
    }
    let mut model = fit_classifier(x, &labels, 4, config)?;
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            let msg = format!("joint cell (y={}, g={}) is empty in the training data", k / 2, k % 2);
            log::warn!("{msg}");
            model.info.warnings.push(msg);
        }
    }
    Ok(model)
}

/// Fits a `n_classes` classifier, including the calibration step when the
/// config asks for it.
pub fn fit_classifier(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    n_classes: usize,
    config: &LearnerConfig,
) -> Result<FittedModel> {
    config.validate()?;
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::InvalidArgument(format!("{} labels for {n} rows", labels.len())));
    }
    if n < MIN_TRAIN_ROWS {
        return Err(Error::InsufficientData { required: MIN_TRAIN_ROWS, actual: n });
    }
    if n_classes < 2 || labels.iter().any(|&l| l >= n_classes) {
        return Err(Error::InvalidArgument(format!("labels must lie in 0..{n_classes}")));
    }
    for ((row, column), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFiniteFeature { row, column });
        }
    }
    if !config.calibrate {
        return fit_uncalibrated(x, labels, n_classes, config);
    }
    let n_hold = ((n as f64) * config.calibration_fraction).ceil() as usize;
    if n_hold < MIN_CALIBRATION_ROWS {
        return Err(Error::HoldoutTooSmall { required: MIN_CALIBRATION_ROWS, actual: n_hold });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(config.seed, &[rng::label_hash("calibration")]));
    let (hold, fit_rows) = idx.split_at(n_hold);
    let xf = x.select(Axis(0), fit_rows);
    let lf: Vec<usize> = fit_rows.iter().map(|&i| labels[i]).collect();
    let base = fit_uncalibrated(xf.view(), &lf, n_classes, config)?;
    let xh = x.select(Axis(0), hold);
    let lh: Vec<usize> = hold.iter().map(|&i| labels[i]).collect();
    let mut model = calibrate(base, xh.view(), &lh)?;
    model.info.n_train = n;
    model.info.config = config.clone();
    Ok(model)
}

fn fit_uncalibrated(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    n_classes: usize,
    config: &LearnerConfig,
) -> Result<FittedModel> {
    let n = x.nrows();
    let info = |learner: String| ModelInfo {
        learner,
        config: config.clone(),
        n_train: n,
        selection: Vec::new(),
        warnings: Vec::new(),
    };
    let predictor = match &config.algorithm {
        Algorithm::Constant => {
            let mut freq = vec![0.0; n_classes];
            labels.iter().for_each(|&l| freq[l] += 1.0);
            freq.iter_mut().for_each(|f| *f /= n as f64);
            Predictor::Constant(freq)
        }
        Algorithm::Logistic(p) => Predictor::Logistic(LogisticModel::fit(x, labels, n_classes, p)),
        Algorithm::Gbt(p) => Predictor::Gbt(GbtClassifier::fit(x, labels, n_classes, p, config.seed)),
        Algorithm::CvSelect { candidates, folds } => {
            return select::cv_select(x, labels, n_classes, candidates, *folds, config.seed);
        }
    };
    Ok(FittedModel::new(predictor, n_classes, info(config.name())))
}

/// Isotonic recalibration of a fitted model on rows it was not trained on.
///
/// Each class probability is mapped through its own isotonic fit against the
/// class indicator and the vector is renormalized; binary models calibrate
/// the positive class only.
pub fn calibrate(model: FittedModel, x_holdout: ArrayView2<'_, f64>, labels: &[usize]) -> Result<FittedModel> {
    let m = x_holdout.nrows();
    if m < MIN_CALIBRATION_ROWS {
        return Err(Error::HoldoutTooSmall { required: MIN_CALIBRATION_ROWS, actual: m });
    }
    let k = model.n_classes();
    let probs = model.predict_proba(x_holdout);
    let classes: Vec<usize> = if k == 2 { vec![1] } else { (0..k).collect() };
    let maps = classes
        .iter()
        .map(|&c| {
            let target: Vec<f64> = labels.iter().map(|&l| f64::from(l == c)).collect();
            IsotonicMap::fit(probs.column(c).as_slice().unwrap_or(&probs.column(c).to_vec()), &target)
        })
        .collect();
    let FittedModel { predictor, mut info, .. } = model;
    info.learner = format!("{}+isotonic", info.learner.trim_end_matches("+isotonic"));
    Ok(FittedModel::new(Predictor::Calibrated { base: Box::new(predictor), maps }, k, info))
}

#[cfg(test)]
mod tests;
