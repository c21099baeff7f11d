use std::path::PathBuf;
use std::str::FromStr;

use fairtl::estimators::{CmiMode, CmiSpec, Estimand, MetricKind, MetricSpec};
use fairtl::learners::LearnerConfig;
use fairtl::sim::{EstimatorConfig, Method};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Split ratio for real data.
pub const DEFAULT_DATA_SPLIT: f64 = 0.6;
/// Split ratio for simulated data.
pub const DEFAULT_SIM_SPLIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Estimate,
    Simulate,
    Importance,
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimate" => Ok(Command::Estimate),
            "simulate" => Ok(Command::Simulate),
            "importance" => Ok(Command::Importance),
            _ => Err(CliError::Config(format!("unknown command `{s}` (estimate, simulate, importance)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Parity,
    ProbParity,
    EqOpp,
    ProbEqOpp,
    Cmi,
}

impl MetricName {
    pub const ALL: [MetricName; 5] =
        [MetricName::Parity, MetricName::ProbParity, MetricName::EqOpp, MetricName::ProbEqOpp, MetricName::Cmi];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Parity => "parity",
            MetricName::ProbParity => "prob_parity",
            MetricName::EqOpp => "eq_opp",
            MetricName::ProbEqOpp => "prob_eq_opp",
            MetricName::Cmi => "cmi",
        }
    }

    pub fn estimand(self, learner: &LearnerConfig, cmi_mode: CmiMode, level: f64) -> Estimand {
        let fair = |s: MetricSpec| Estimand::Fairness(s.with_learner(learner.clone()).with_level(level));
        match self {
            MetricName::Parity => fair(MetricSpec::parity(MetricKind::Traditional)),
            MetricName::ProbParity => fair(MetricSpec::parity(MetricKind::Probabilistic)),
            MetricName::EqOpp => fair(MetricSpec::opportunity(MetricKind::Traditional)),
            MetricName::ProbEqOpp => fair(MetricSpec::opportunity(MetricKind::Probabilistic)),
            MetricName::Cmi => Estimand::Cmi(
                CmiSpec::new(cmi_mode).with_learner(learner.clone().calibrated()).with_level(level),
            ),
        }
    }

    pub fn study_estimator(self, learner: &LearnerConfig, cmi_mode: CmiMode, level: f64) -> EstimatorConfig {
        let method = match self.estimand(learner, cmi_mode, level) {
            Estimand::Fairness(s) => Method::Fairness(s),
            Estimand::Cmi(s) => Method::Cmi(s),
        };
        EstimatorConfig::new(self.as_str(), method)
    }
}

impl FromStr for MetricName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown metric `{s}`")))
    }
}

pub fn parse_metrics(list: &str) -> Result<Vec<MetricName>> {
    if list.trim() == "all" {
        return Ok(MetricName::ALL.to_vec());
    }
    let out: Vec<MetricName> = list.split(',').map(str::parse).collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(CliError::Config("empty metric list".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerChoice {
    SuperLearner,
    Logistic,
    Gbt,
    Constant,
}

impl LearnerChoice {
    pub fn config(self, seed: u64) -> LearnerConfig {
        let base = match self {
            LearnerChoice::SuperLearner => LearnerConfig::super_learner(),
            LearnerChoice::Logistic => LearnerConfig::logistic(),
            LearnerChoice::Gbt => LearnerConfig::gbt(),
            LearnerChoice::Constant => LearnerConfig::constant(),
        };
        base.with_seed(seed)
    }
}

impl FromStr for LearnerChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "super_learner" => Ok(LearnerChoice::SuperLearner),
            "logistic" => Ok(LearnerChoice::Logistic),
            "gbt" => Ok(LearnerChoice::Gbt),
            "constant" => Ok(LearnerChoice::Constant),
            _ => Err(CliError::Config(format!("unknown learner `{s}` (super_learner, logistic, gbt, constant)"))),
        }
    }
}

/// A fully resolved invocation; embedded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// CSV for estimate/importance; optional study TOML for simulate.
    pub input: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    /// Simulation design id when simulating without a study file.
    pub dgp: Option<String>,
    pub metrics: Vec<MetricName>,
    pub split_ratio: f64,
    pub seed: u64,
    pub level: f64,
    pub learner: LearnerChoice,
    pub cmi_mode: CmiMode,
    /// Worker threads; 0 lets rayon decide.
    #[serde(skip)]
    pub threads: usize,
    pub output: PathBuf,
    pub permutations: usize,
    pub replicates: usize,
    pub sample_sizes: Vec<usize>,
    pub n_mc: usize,
}

impl RunConfig {
    /// Defaults for `command` writing to `output`.
    pub fn new(command: Command, output: impl Into<PathBuf>) -> Self {
        Self {
            command,
            input: None,
            schema: None,
            dgp: None,
            metrics: match command {
                Command::Importance => vec![MetricName::Parity],
                _ => MetricName::ALL.to_vec(),
            },
            split_ratio: match command {
                Command::Simulate => DEFAULT_SIM_SPLIT,
                _ => DEFAULT_DATA_SPLIT,
            },
            seed: 0,
            level: 0.95,
            learner: LearnerChoice::SuperLearner,
            cmi_mode: CmiMode::Single,
            threads: 0,
            output: output.into(),
            permutations: fairtl::importance::DEFAULT_PERMUTATIONS,
            replicates: 10,
            sample_sizes: vec![500, 2000],
            n_mc: 1_000_000,
        }
    }

    pub fn learner_config(&self) -> LearnerConfig {
        self.learner.config(self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split ratio {} not in (0,1)", self.split_ratio));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level {} not in (0,1)", self.level));
        }
        if self.metrics.is_empty() {
            return bad("no metrics requested".into());
        }
        for p in self.input.iter().chain(self.schema.iter()) {
            if !p.exists() {
                return bad(format!("path {} does not exist", p.display()));
            }
        }
        match self.command {
            Command::Estimate | Command::Importance => {
                if self.input.is_none() || self.schema.is_none() {
                    return bad("estimate and importance need --input and --schema".into());
                }
                if self.command == Command::Importance && self.permutations == 0 {
                    return bad("--permutations must be at least 1".into());
                }
            }
            Command::Simulate => {
                if self.input.is_some() == self.dgp.is_some() {
                    return bad("simulate needs exactly one of --input (study file) or --dgp".into());
                }
                if self.dgp.is_some() && (self.replicates == 0 || self.sample_sizes.is_empty()) {
                    return bad("simulate needs --replicates >= 1 and at least one sample size".into());
                }
            }
        }
        Ok(())
    }
}
