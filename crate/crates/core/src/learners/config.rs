use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    /// L2 penalty on the standardized slopes (the intercept is unpenalized).
    pub ridge: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self { ridge: 1e-6, max_iter: 100, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub min_samples_leaf: usize,
    /// L2 regularization of leaf values.
    pub l2: f64,
    pub max_bins: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 3,
            learning_rate: 0.1,
            subsample: 1.0,
            min_samples_leaf: 5,
            l2: 1.0,
            max_bins: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    /// Empirical class frequencies, ignoring the covariates.
    Constant,
    /// Binary: IRLS logistic regression. Multiclass: multinomial logistic
    /// fitted by Newton's method.
    Logistic(LogisticParams),
    /// Gradient-boosted regression trees on log-loss; one-vs-rest with
    /// renormalization for more than two classes.
    Gbt(GbtParams),
    /// Discrete super learner: the candidate with the lowest K-fold
    /// cross-validated log-loss, refitted on all rows.
    CvSelect { candidates: Vec<LearnerConfig>, folds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    /// Hold out part of the training rows and apply isotonic calibration.
    #[serde(default)]
    pub calibrate: bool,
    /// Fraction of training rows used as the calibration holdout.
    #[serde(default = "default_calibration_fraction")]
    pub calibration_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_calibration_fraction() -> f64 {
    0.2
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self { algorithm, calibrate: false, calibration_fraction: 0.2, seed: 0 }
    }

    pub fn constant() -> Self {
        Self::new(Algorithm::Constant)
    }

    pub fn logistic() -> Self {
        Self::new(Algorithm::Logistic(LogisticParams::default()))
    }

    pub fn gbt() -> Self {
        Self::new(Algorithm::Gbt(GbtParams::default()))
    }

    pub fn gbt_with(params: GbtParams) -> Self {
        Self::new(Algorithm::Gbt(params))
    }

    pub fn cv_select(candidates: Vec<LearnerConfig>, folds: usize) -> Self {
        Self::new(Algorithm::CvSelect { candidates, folds })
    }

    /// Default super learner library: constant, logistic and boosting.
    pub fn super_learner() -> Self {
        Self::cv_select(vec![Self::constant(), Self::logistic(), Self::gbt()], 5)
    }

    pub fn calibrated(mut self) -> Self {
        self.calibrate = true;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn name(&self) -> String {
        let base = match &self.algorithm {
            Algorithm::Constant => "constant".to_string(),
            Algorithm::Logistic(_) => "logistic".to_string(),
            Algorithm::Gbt(_) => "gbt".to_string(),
            Algorithm::CvSelect { candidates, .. } => format!(
                "cv_select[{}]",
                candidates.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")
            ),
        };
        if self.calibrate {
            format!("{base}+isotonic")
        } else {
            base
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.calibrate && !(self.calibration_fraction > 0.0 && self.calibration_fraction < 1.0) {
            return bad(format!("calibration_fraction {} not in (0,1)", self.calibration_fraction));
        }
        match &self.algorithm {
            Algorithm::Constant => Ok(()),
            Algorithm::Logistic(p) => {
                if !(p.ridge >= 0.0 && p.ridge.is_finite()) {
                    return bad(format!("ridge {} must be finite and >= 0", p.ridge));
                }
                if p.max_iter == 0 || !(p.tol > 0.0) {
                    return bad("logistic max_iter must be >= 1 and tol > 0".into());
                }
                Ok(())
            }
            Algorithm::Gbt(p) => {
                if p.n_trees == 0 || p.max_depth == 0 || p.max_depth > 16 {
                    return bad("gbt needs n_trees >= 1 and 1 <= max_depth <= 16".into());
                }
                if !(p.learning_rate > 0.0 && p.learning_rate <= 1.0) {
                    return bad(format!("learning_rate {} not in (0,1]", p.learning_rate));
                }
                if !(p.subsample > 0.0 && p.subsample <= 1.0) {
                    return bad(format!("subsample {} not in (0,1]", p.subsample));
                }
                if p.min_samples_leaf == 0 || p.max_bins < 2 || p.max_bins > 65535 || !(p.l2 >= 0.0) {
                    return bad("gbt needs min_samples_leaf >= 1, 2 <= max_bins <= 65535, l2 >= 0".into());
                }
                Ok(())
            }
            Algorithm::CvSelect { candidates, folds } => {
                if *folds < 2 {
                    return bad(format!("cv_select needs folds >= 2, got {folds}"));
                }
                if candidates.is_empty() {
                    return bad("cv_select needs at least one candidate".into());
                }
                candidates.iter().try_for_each(|c| c.validate())
            }
        }
    }
}
