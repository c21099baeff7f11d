//! Replicated simulation studies: coverage, bias and interval width per
//! (design, estimator, sample size) cell.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{generate, DgpSpec};
use super::truth::{mc_truth, CmiReference, Target, Truth};
use crate::data::split_sample;
use crate::error::{Error, Result};
use crate::estimators::{estimate_cmi_knn, estimate_cmi_tl, estimate_fairness, naive_model_ttest, CmiSpec, MetricKind, MetricSpec};
use crate::learners::fit_binary;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Parity or equal-opportunity estimating-equation estimator.
    Fairness(MetricSpec),
    /// Plug-in CMI estimator.
    Cmi(CmiSpec),
    /// Nearest-neighbour CMI on the evaluation split (point estimate only).
    CmiKnn { k: usize },
    /// Welch t-test on the outcome model's predictions: thresholded for a
    /// traditional spec, raw for a probabilistic one.
    TTest(MetricSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub name: String,
    #[serde(flatten)]
    pub method: Method,
}

impl EstimatorConfig {
    pub fn new(name: impl Into<String>, method: Method) -> Self {
        Self { name: name.into(), method }
    }

    fn target(&self, cmi_reference: CmiReference) -> Target {
        match &self.method {
            Method::Fairness(s) | Method::TTest(s) => Target::from_spec(s),
            Method::Cmi(_) | Method::CmiKnn { .. } => Target::cmi(cmi_reference),
        }
    }

    fn metric_label(&self) -> String {
        match &self.method {
            Method::Fairness(s) => s.metric_id().to_string(),
            Method::TTest(s) => format!("ttest_{}", s.metric_id()),
            Method::Cmi(_) => "cmi".into(),
            Method::CmiKnn { .. } => "cmi_knn".into(),
        }
    }
}

fn default_split() -> f64 {
    0.5
}

fn default_level() -> f64 {
    0.95
}

fn default_n_mc() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub master_seed: u64,
    pub replicates: usize,
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_split")]
    pub split_ratio: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    /// Worker threads; 0 uses the global rayon pool.
    #[serde(default)]
    pub threads: usize,
    /// Reference quantity for CMI-type estimators.
    #[serde(default)]
    pub cmi_reference: CmiReference,
    pub dgps: Vec<DgpSpec>,
    pub estimators: Vec<EstimatorConfig>,
}

impl StudyConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.sample_sizes.is_empty() || self.dgps.is_empty() || self.estimators.is_empty() {
            return bad("sample_sizes, dgps and estimators must be non-empty");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) || !(self.level > 0.0 && self.level < 1.0) {
            return bad("split_ratio and level must lie in (0,1)");
        }
        let mut names: Vec<&str> = self.estimators.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("estimator names must be unique");
        }
        self.dgps.iter().try_for_each(|d| d.validate())
    }
}

/// One estimator on one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub dgp: String,
    pub estimator: String,
    pub metric: String,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub truth: f64,
    pub point: Option<f64>,
    pub stderr: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub covered: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub dgp: String,
    pub estimator: String,
    pub metric: String,
    pub n: usize,
    pub replicates: usize,
    pub failures: usize,
    pub truth: f64,
    pub truth_se: f64,
    /// Share of intervals containing the truth; `None` without intervals.
    pub coverage: Option<f64>,
    pub mean_bias: Option<f64>,
    pub mean_abs_error: Option<f64>,
    pub point_sd: Option<f64>,
    pub mean_width: Option<f64>,
    pub mean_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub dgp: String,
    pub target: String,
    pub value: f64,
    pub mc_se: f64,
    pub n_mc: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub config: StudyConfig,
    pub truths: Vec<TruthRecord>,
    pub cells: Vec<CoverageCell>,
    pub records: Vec<ReplicateRecord>,
}

impl CoverageReport {
    pub fn cell(&self, dgp: &str, estimator: &str, n: usize) -> Option<&CoverageCell> {
        self.cells.iter().find(|c| c.dgp == dgp && c.estimator == estimator && c.n == n)
    }

    pub fn records_for<'a>(&'a self, dgp: &'a str, estimator: &'a str, n: usize) -> impl Iterator<Item = &'a ReplicateRecord> + 'a {
        self.records.iter().filter(move |r| r.dgp == dgp && r.estimator == estimator && r.n == n)
    }
}

/// Seed of the dataset for replicate `rep` of `(dgp, n)`; shared by all
/// estimators so that their results are paired.
pub fn data_seed(master: u64, dgp: &DgpSpec, n: usize, rep: usize) -> u64 {
    rng::derive_seed(master, &[rng::label_hash(&dgp.label()), n as u64, rep as u64])
}

struct Outcome {
    point: f64,
    ci: Option<(f64, f64, f64)>,
}

fn run_estimator(est: &EstimatorConfig, data: &crate::data::Dataset, ratio: f64, seed: u64, level: f64) -> Result<Outcome> {
    if let Method::CmiKnn { k } = est.method {
        let split = split_sample(data, ratio, seed)?;
        return Ok(Outcome { point: estimate_cmi_knn(&split.eval, k)?, ci: None });
    }
    let split = split_sample(data, ratio, seed)?;
    let res = match &est.method {
        Method::Fairness(s) => estimate_fairness(&split, &s.clone().with_level(level))?,
        Method::Cmi(s) => estimate_cmi_tl(&split, &s.clone().with_level(level))?,
        Method::TTest(s) => {
            let model = fit_binary(split.train.features(), split.train.outcome(), &s.outcome)?;
            let threshold = (s.kind == MetricKind::Traditional).then_some(s.threshold);
            let t = naive_model_ttest(&model, &split.eval, threshold, level)?;
            return Ok(Outcome { point: t.diff, ci: Some((t.stderr, t.ci_low, t.ci_high)) });
        }
        Method::CmiKnn { .. } => unreachable!("handled above"),
    };
    Ok(Outcome { point: res.point, ci: Some((res.stderr, res.ci_low, res.ci_high)) })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sd(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    (v.len() > 1).then(|| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

fn summarize(records: &[&ReplicateRecord], truth: &Truth) -> CoverageCell {
    let first = records[0];
    let ok: Vec<&&ReplicateRecord> = records.iter().filter(|r| r.point.is_some()).collect();
    let points: Vec<f64> = ok.iter().filter_map(|r| r.point).collect();
    let errors: Vec<f64> = points.iter().map(|p| p - truth.value).collect();
    let with_ci: Vec<&&&ReplicateRecord> = ok.iter().filter(|r| r.covered.is_some()).collect();
    let coverage = (!with_ci.is_empty())
        .then(|| with_ci.iter().filter(|r| r.covered == Some(true)).count() as f64 / with_ci.len() as f64);
    let widths: Vec<f64> = with_ci.iter().filter_map(|r| Some(r.ci_high? - r.ci_low?)).collect();
    let stderrs: Vec<f64> = with_ci.iter().filter_map(|r| r.stderr).collect();
    CoverageCell {
        dgp: first.dgp.clone(),
        estimator: first.estimator.clone(),
        metric: first.metric.clone(),
        n: first.n,
        replicates: records.len(),
        failures: records.len() - ok.len(),
        truth: truth.value,
        truth_se: truth.mc_se,
        coverage,
        mean_bias: mean(&errors),
        mean_abs_error: mean(&errors.iter().map(|e| e.abs()).collect::<Vec<_>>()),
        point_sd: sd(&points),
        mean_width: mean(&widths),
        mean_stderr: mean(&stderrs),
    }
}

/// Runs every (design, sample size, replicate) dataset through every
/// estimator. Results do not depend on the worker count.
pub fn run_coverage_study(config: &StudyConfig) -> Result<CoverageReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &StudyConfig) -> Result<CoverageReport> {
    // truths, one per (design, target)
    let mut wanted: Vec<(usize, Target)> = Vec::new();
    for (d, _) in config.dgps.iter().enumerate() {
        for est in &config.estimators {
            let t = est.target(config.cmi_reference);
            if !wanted.iter().any(|(dd, tt)| *dd == d && *tt == t) {
                wanted.push((d, t));
            }
        }
    }
    let truth_values: Vec<Truth> = wanted
        .par_iter()
        .map(|(d, t)| {
            let dgp = &config.dgps[*d];
            let seed = rng::derive_seed(config.master_seed, &[rng::label_hash("truth"), rng::label_hash(&dgp.label())]);
            mc_truth(dgp, t, config.n_mc, seed)
        })
        .collect::<Result<_>>()?;
    let truth_of: HashMap<(usize, String), Truth> = wanted
        .iter()
        .zip(&truth_values)
        .map(|((d, t), v)| ((*d, t.label()), *v))
        .collect();

    let mut tasks = Vec::new();
    for (d, _) in config.dgps.iter().enumerate() {
        for &n in &config.sample_sizes {
            for rep in 0..config.replicates {
                tasks.push((d, n, rep));
            }
        }
    }
    let per_task: Vec<Vec<ReplicateRecord>> = tasks
        .par_iter()
        .map(|&(d, n, rep)| {
            let dgp = &config.dgps[d];
            let seed = data_seed(config.master_seed, dgp, n, rep);
            let data = generate(dgp, n, seed);
            config
                .estimators
                .iter()
                .map(|est| {
                    let truth = truth_of[&(d, est.target(config.cmi_reference).label())].value;
                    let outcome = data
                        .as_ref()
                        .map_err(Clone::clone)
                        .and_then(|ds| run_estimator(est, ds, config.split_ratio, rng::derive_seed(seed, &[1]), config.level));
                    let mut rec = ReplicateRecord {
                        dgp: dgp.label(),
                        estimator: est.name.clone(),
                        metric: est.metric_label(),
                        n,
                        rep,
                        seed,
                        truth,
                        point: None,
                        stderr: None,
                        ci_low: None,
                        ci_high: None,
                        covered: None,
                        error: None,
                    };
                    match outcome {
                        Ok(o) => {
                            rec.point = Some(o.point);
                            if let Some((se, lo, hi)) = o.ci {
                                rec.stderr = Some(se);
                                rec.ci_low = Some(lo);
                                rec.ci_high = Some(hi);
                                rec.covered = Some(lo <= truth && truth <= hi);
                            }
                        }
                        Err(e) => rec.error = Some(e.to_string()),
                    }
                    rec
                })
                .collect()
        })
        .collect();
    let records: Vec<ReplicateRecord> = per_task.into_iter().flatten().collect();

    let mut cells = Vec::new();
    for (d, dgp) in config.dgps.iter().enumerate() {
        let label = dgp.label();
        for est in &config.estimators {
            let truth = truth_of[&(d, est.target(config.cmi_reference).label())];
            for &n in &config.sample_sizes {
                let group: Vec<&ReplicateRecord> =
                    records.iter().filter(|r| r.dgp == label && r.estimator == est.name && r.n == n).collect();
                cells.push(summarize(&group, &truth));
            }
        }
    }
    let truths = wanted
        .iter()
        .zip(&truth_values)
        .map(|((d, t), v)| TruthRecord {
            dgp: config.dgps[*d].label(),
            target: t.label(),
            value: v.value,
            mc_se: v.mc_se,
            n_mc: v.n_mc,
        })
        .collect();
    Ok(CoverageReport { config: config.clone(), truths, cells, records })
}
