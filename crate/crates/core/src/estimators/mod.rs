//! Estimating-equation estimators of data fairness and conditional mutual
//! information, plus model-level baselines.
//!
//! Every estimator takes nuisance models fitted on the training split and
//! evaluates on the evaluation split; the returned [`EstimateResult`] carries
//! the per-row influence-function values behind its Wald interval.

mod baseline;
mod cmi;
mod fairness;
mod knn;

pub use baseline::{model_fairness_estimate, naive_model_ttest, TTestResult};
pub use cmi::{cmi_with, estimate_cmi_tl, CmiMode, CmiNuisances, CmiSpec};
pub use fairness::{estimate_fairness, estimate_opportunity, estimate_parity, fairness_with, opportunity_with, parity_with};
pub use knn::estimate_cmi_knn;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SplitPair};
use crate::error::{Error, Result};
use crate::inference::{EstimateResult, MetricId};
use crate::learners::{fit_binary, fit_joint, LearnerConfig, ProbabilityModel};

/// Clip range for propensity-type weights `π̂` and `ρ̂`.
pub const WEIGHT_CLIP: f64 = 1e-3;
/// Share of clipped rows above which a truncation warning is attached.
pub const TRUNCATION_WARN_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMetric {
    Parity,
    Opportunity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Contrast of the Bayes decision `1{D(x) ≥ c}`.
    Traditional,
    /// Contrast of `D(x)` itself.
    Probabilistic,
}

/// What to estimate and how to fit its nuisances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub metric: FairnessMetric,
    pub kind: MetricKind,
    /// Decision threshold `c`; `D̂(x) = c` counts as a positive decision.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Learner for `D(x) = P(Y=1|X=x)`.
    #[serde(default = "LearnerConfig::super_learner")]
    pub outcome: LearnerConfig,
    /// Learner for `π(x) = P(G=1|X=x)` (probabilistic parity).
    #[serde(default = "LearnerConfig::super_learner")]
    pub propensity: LearnerConfig,
    /// Learner for the joint law of `(Y, G)` given `X` (probabilistic opportunity).
    #[serde(default = "LearnerConfig::super_learner")]
    pub joint: LearnerConfig,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_threshold() -> f64 {
    0.5
}

fn default_level() -> f64 {
    0.95
}

impl MetricSpec {
    /// A spec with the default super learner for every nuisance.
    pub fn new(metric: FairnessMetric, kind: MetricKind) -> Self {
        let learner = LearnerConfig::super_learner();
        Self {
            metric,
            kind,
            threshold: 0.5,
            outcome: learner.clone(),
            propensity: learner.clone(),
            joint: learner,
            level: 0.95,
        }
    }

    pub fn parity(kind: MetricKind) -> Self {
        Self::new(FairnessMetric::Parity, kind)
    }

    pub fn opportunity(kind: MetricKind) -> Self {
        Self::new(FairnessMetric::Opportunity, kind)
    }

    /// Uses `learner` for every nuisance.
    pub fn with_learner(mut self, learner: LearnerConfig) -> Self {
        self.outcome = learner.clone();
        self.propensity = learner.clone();
        self.joint = learner;
        self
    }

    pub fn with_outcome(mut self, learner: LearnerConfig) -> Self {
        self.outcome = learner;
        self
    }

    pub fn with_propensity(mut self, learner: LearnerConfig) -> Self {
        self.propensity = learner;
        self
    }

    pub fn with_joint(mut self, learner: LearnerConfig) -> Self {
        self.joint = learner;
        self
    }

    pub fn with_threshold(mut self, c: f64) -> Self {
        self.threshold = c;
        self
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn metric_id(&self) -> MetricId {
        match (self.metric, self.kind) {
            (FairnessMetric::Parity, MetricKind::Traditional) => MetricId::Parity,
            (FairnessMetric::Parity, MetricKind::Probabilistic) => MetricId::ProbabilisticParity,
            (FairnessMetric::Opportunity, MetricKind::Traditional) => MetricId::EqualOpportunity,
            (FairnessMetric::Opportunity, MetricKind::Probabilistic) => MetricId::ProbabilisticEqualOpportunity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(format!("threshold {} not in (0,1)", self.threshold)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level {} not in (0,1)", self.level)));
        }
        self.outcome.validate()?;
        self.propensity.validate()?;
        self.joint.validate()
    }
}

/// Fitted plug-in models used by the fairness estimators.
#[derive(Debug, Clone)]
pub struct NuisanceSet {
    pub d_model: Arc<dyn ProbabilityModel>,
    pub pi_model: Option<Arc<dyn ProbabilityModel>>,
    pub rho_model: Option<Arc<dyn ProbabilityModel>>,
}

impl NuisanceSet {
    pub fn new(d_model: Arc<dyn ProbabilityModel>) -> Self {
        Self { d_model, pi_model: None, rho_model: None }
    }

    pub fn with_pi(mut self, pi: Arc<dyn ProbabilityModel>) -> Self {
        self.pi_model = Some(pi);
        self
    }

    pub fn with_rho(mut self, rho: Arc<dyn ProbabilityModel>) -> Self {
        self.rho_model = Some(rho);
        self
    }

    /// Fits the models `spec` needs on `train`.
    pub fn fit(train: &Dataset, spec: &MetricSpec) -> Result<Self> {
        spec.validate()?;
        let x = train.features();
        let d = fit_binary(x, train.outcome(), &spec.outcome)?;
        let mut set = Self::new(Arc::new(d));
        if spec.kind == MetricKind::Probabilistic {
            match spec.metric {
                FairnessMetric::Parity => {
                    set.pi_model = Some(Arc::new(fit_binary(x, train.group(), &spec.propensity)?));
                }
                FairnessMetric::Opportunity => {
                    set.rho_model = Some(Arc::new(fit_joint(x, train.outcome(), train.group(), &spec.joint)?));
                }
            }
        }
        Ok(set)
    }

    fn describe(&self) -> Vec<String> {
        let mut out = vec![format!("outcome: {}", self.d_model.describe())];
        if let Some(p) = &self.pi_model {
            out.push(format!("propensity: {}", p.describe()));
        }
        if let Some(r) = &self.rho_model {
            out.push(format!("joint: {}", r.describe()));
        }
        out
    }
}

/// Any estimand the crate can evaluate on a split; used by the importance
/// and study drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimand", rename_all = "snake_case")]
pub enum Estimand {
    Fairness(MetricSpec),
    Cmi(CmiSpec),
}

impl Estimand {
    pub fn metric_id(&self) -> MetricId {
        match self {
            Estimand::Fairness(s) => s.metric_id(),
            Estimand::Cmi(_) => MetricId::Cmi,
        }
    }

    pub fn estimate(&self, split: &SplitPair) -> Result<EstimateResult> {
        match self {
            Estimand::Fairness(s) => estimate_fairness(split, s),
            Estimand::Cmi(s) => estimate_cmi_tl(split, s),
        }
    }

    /// The same estimand with every nuisance replaced by the constant learner.
    pub fn with_constant_learners(&self) -> Self {
        match self {
            Estimand::Fairness(s) => Estimand::Fairness(s.clone().with_learner(LearnerConfig::constant())),
            Estimand::Cmi(s) => Estimand::Cmi(s.clone().with_learner(LearnerConfig::constant())),
        }
    }
}
