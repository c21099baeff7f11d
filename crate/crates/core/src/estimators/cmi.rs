use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SplitPair};
use crate::error::{Error, Result};
use crate::inference::{EstimateResult, MetricId};
use crate::learners::{fit_binary, fit_joint, joint_class, Algorithm, LearnerConfig, ProbabilityModel, PROB_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmiMode {
    /// Marginals `p(y|x)` and `p(g|x)` are sums of the joint model.
    Single,
    /// Marginals come from their own binary models.
    Separate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmiSpec {
    pub mode: CmiMode,
    #[serde(default = "calibrated_super_learner")]
    pub joint: LearnerConfig,
    /// Learner for `p(y|x)`, separate mode only.
    #[serde(default = "calibrated_super_learner")]
    pub outcome: LearnerConfig,
    /// Learner for `p(g|x)`, separate mode only.
    #[serde(default = "calibrated_super_learner")]
    pub group: LearnerConfig,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_level() -> f64 {
    0.95
}

fn calibrated_super_learner() -> LearnerConfig {
    LearnerConfig::super_learner().calibrated()
}

impl CmiSpec {
    /// Calibrated super learner for every model.
    pub fn new(mode: CmiMode) -> Self {
        let learner = calibrated_super_learner();
        Self { mode, joint: learner.clone(), outcome: learner.clone(), group: learner, level: 0.95 }
    }

    pub fn with_learner(mut self, learner: LearnerConfig) -> Self {
        self.joint = learner.clone();
        self.outcome = learner.clone();
        self.group = learner;
        self
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    fn configs(&self) -> Vec<&LearnerConfig> {
        match self.mode {
            CmiMode::Single => vec![&self.joint],
            CmiMode::Separate => vec![&self.joint, &self.outcome, &self.group],
        }
    }
}

fn is_calibrated(cfg: &LearnerConfig) -> bool {
    cfg.calibrate
        || matches!(&cfg.algorithm, Algorithm::CvSelect { candidates, .. } if candidates.iter().all(is_calibrated))
}

/// Fitted models behind a CMI estimate.
#[derive(Debug, Clone)]
pub struct CmiNuisances {
    pub joint: Arc<dyn ProbabilityModel>,
    /// `(p(y|x), p(g|x))` for separate mode; `None` marginalizes the joint.
    pub marginals: Option<(Arc<dyn ProbabilityModel>, Arc<dyn ProbabilityModel>)>,
}

impl CmiNuisances {
    pub fn fit(train: &Dataset, spec: &CmiSpec) -> Result<Self> {
        let x = train.features();
        let joint: Arc<dyn ProbabilityModel> = Arc::new(fit_joint(x, train.outcome(), train.group(), &spec.joint)?);
        let marginals = match spec.mode {
            CmiMode::Single => None,
            CmiMode::Separate => {
                let py: Arc<dyn ProbabilityModel> = Arc::new(fit_binary(x, train.outcome(), &spec.outcome)?);
                let pg: Arc<dyn ProbabilityModel> = Arc::new(fit_binary(x, train.group(), &spec.group)?);
                Some((py, pg))
            }
        };
        Ok(Self { joint, marginals })
    }
}

/// Plug-in log-ratio `log p̂(y,g|x) − log p̂(y|x) − log p̂(g|x)` per row.
fn log_ratios(eval: &Dataset, nuisances: &CmiNuisances) -> Result<Vec<f64>> {
    if nuisances.joint.n_classes() != 4 {
        return Err(Error::InvalidArgument("joint model must have 4 classes".into()));
    }
    let x = eval.features();
    let joint = nuisances.joint.predict_proba(x);
    let separate = nuisances
        .marginals
        .as_ref()
        .map(|(py, pg)| (py.predict_positive(x), pg.predict_positive(x)));
    let ln = |p: f64| p.max(PROB_FLOOR).ln();
    Ok((0..eval.n())
        .map(|i| {
            let (y, g) = (eval.outcome()[i], eval.group()[i]);
            let row = joint.row(i);
            let pyg = row[joint_class(y, g)];
            let (py, pg) = match &separate {
                Some((py1, pg1)) => (
                    if y == 1 { py1[i] } else { 1.0 - py1[i] },
                    if g == 1 { pg1[i] } else { 1.0 - pg1[i] },
                ),
                None => (
                    row[joint_class(y, 0)] + row[joint_class(y, 1)],
                    row[joint_class(0, g)] + row[joint_class(1, g)],
                ),
            };
            ln(pyg) - ln(py) - ln(pg)
        })
        .collect())
}

/// CMI estimate on `eval` from fitted models. Negative values are returned
/// unmodified.
pub fn cmi_with(eval: &Dataset, nuisances: &CmiNuisances, level: f64) -> Result<EstimateResult> {
    let values = log_ratios(eval, nuisances)?;
    let point = values.iter().sum::<f64>() / values.len() as f64;
    let eif = values.iter().map(|v| v - point).collect();
    let mut res = EstimateResult::from_eif(MetricId::Cmi, point, eif, level)?;
    res.models.push(format!("joint: {}", nuisances.joint.describe()));
    if let Some((py, pg)) = &nuisances.marginals {
        res.models.push(format!("outcome: {}", py.describe()));
        res.models.push(format!("group: {}", pg.describe()));
    }
    Ok(res)
}

/// Fits the CMI models on the training split and estimates on the
/// evaluation split.
pub fn estimate_cmi_tl(split: &SplitPair, spec: &CmiSpec) -> Result<EstimateResult> {
    let nuisances = CmiNuisances::fit(&split.train, spec)?;
    let mut res = cmi_with(&split.eval, &nuisances, spec.level)?;
    if !spec.configs().into_iter().all(is_calibrated) {
        let msg = "CalibrationMissing: CMI models are not calibrated".to_string();
        log::warn!("{msg}");
        res.warnings.push(msg);
    }
    Ok(res)
}
