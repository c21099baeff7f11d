use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use fairtl::estimators::Estimand;
use fairtl::importance::{shapley_importance, ImportanceReport};
use fairtl::sim::{run_coverage_study, CoverageReport, DgpSpec, StudyConfig};
use fairtl::{split_sample, Dataset, EstimateResult, SplitPair};
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::error::{CliError, Result};
use crate::schema::{load_csv, Schema};

pub const REPORT_FILE: &str = "report.json";
pub const METADATA_FILE: &str = "metadata.json";
pub const FAILURE_MARKER: &str = "FAILED";

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub n: usize,
    pub n_features: usize,
    pub n_sources: usize,
    pub outcome_prevalence: f64,
    pub group_prevalence: f64,
    pub n_train: usize,
    pub n_eval: usize,
    pub split_seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub config: RunConfig,
    pub data: DataSummary,
    pub estimates: Vec<EstimateResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImportanceRunReport {
    pub config: RunConfig,
    pub data: DataSummary,
    pub importance: Vec<ImportanceReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub config: RunConfig,
    pub study: CoverageReport,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    Estimate(EstimateReport),
    Importance(ImportanceRunReport),
    Simulate(SimulateReport),
}

fn load_split(config: &RunConfig) -> Result<(SplitPair, DataSummary)> {
    let input = config.input.as_ref().expect("validated");
    let schema = Schema::from_path(config.schema.as_ref().expect("validated"))?;
    let loaded = load_csv(input, &schema)?;
    let d: &Dataset = &loaded.dataset;
    log::info!("loaded {} rows ({} dropped for missing values)", d.n(), loaded.rows_dropped);
    let split = split_sample(d, config.split_ratio, config.seed)?;
    let share = |v: &[u8]| v.iter().map(|&x| f64::from(x)).sum::<f64>() / v.len() as f64;
    let summary = DataSummary {
        rows_read: loaded.rows_read,
        rows_dropped: loaded.rows_dropped,
        n: d.n(),
        n_features: d.n_features(),
        n_sources: d.sources().len(),
        outcome_prevalence: share(d.outcome()),
        group_prevalence: share(d.group()),
        n_train: split.train.n(),
        n_eval: split.eval.n(),
        split_seed: config.seed,
    };
    Ok((split, summary))
}

fn estimands(config: &RunConfig) -> Vec<Estimand> {
    let learner = config.learner_config();
    config.metrics.iter().map(|m| m.estimand(&learner, config.cmi_mode, config.level)).collect()
}

fn study_config(config: &RunConfig) -> Result<StudyConfig> {
    if let Some(path) = &config.input {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut study = StudyConfig::from_toml_str(&text)?;
        study.threads = config.threads;
        return Ok(study);
    }
    let dgp = DgpSpec::from_id(config.dgp.as_deref().expect("validated"))?;
    let learner = config.learner_config();
    Ok(StudyConfig {
        master_seed: config.seed,
        replicates: config.replicates,
        sample_sizes: config.sample_sizes.clone(),
        split_ratio: config.split_ratio,
        level: config.level,
        n_mc: config.n_mc,
        threads: config.threads,
        cmi_reference: Default::default(),
        dgps: vec![dgp],
        estimators: config.metrics.iter().map(|m| m.study_estimator(&learner, config.cmi_mode, config.level)).collect(),
    })
}

/// Runs a command in memory and returns its report.
pub fn execute(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match config.command {
        Command::Estimate => {
            let (split, data) = load_split(config)?;
            let estimates = estimands(config)
                .iter()
                .map(|e| {
                    log::info!("estimating {}", e.metric_id());
                    e.estimate(&split)
                })
                .collect::<fairtl::Result<Vec<_>>>()?;
            Ok(Report::Estimate(EstimateReport { config: config.clone(), data, estimates }))
        }
        Command::Importance => {
            let (split, data) = load_split(config)?;
            let importance = estimands(config)
                .iter()
                .map(|e| {
                    log::info!("importance for {}", e.metric_id());
                    shapley_importance(&split, e, config.permutations, config.seed)
                })
                .collect::<fairtl::Result<Vec<_>>>()?;
            Ok(Report::Importance(ImportanceRunReport { config: config.clone(), data, importance }))
        }
        Command::Simulate => {
            let study = run_coverage_study(&study_config(config)?)?;
            Ok(Report::Simulate(SimulateReport { config: config.clone(), study }))
        }
    })
}

#[derive(Serialize)]
struct EstimateRow<'a> {
    metric: &'a str,
    point: f64,
    stderr: f64,
    ci_low: f64,
    ci_high: f64,
    level: f64,
    n_eval: usize,
    models: String,
    warnings: String,
}

#[derive(Serialize)]
struct ImportanceRow<'a> {
    metric: &'a str,
    feature: &'a str,
    contribution: f64,
    stderr: f64,
    full_value: f64,
    empty_value: f64,
    n_completed: usize,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_tables(report: &Report, dir: &Path) -> Result<Vec<String>> {
    let mut files = Vec::new();
    match report {
        Report::Estimate(r) => {
            let rows = r.estimates.iter().map(|e| EstimateRow {
                metric: e.metric.as_str(),
                point: e.point,
                stderr: e.stderr,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                level: e.level,
                n_eval: e.n_eval,
                models: e.models.join("; "),
                warnings: e.warnings.join("; "),
            });
            write_csv(&dir.join("estimates.csv"), rows)?;
            files.push("estimates.csv".into());
        }
        Report::Importance(r) => {
            let rows = r.importance.iter().flat_map(|rep| {
                rep.features.iter().map(move |f| ImportanceRow {
                    metric: rep.metric.as_str(),
                    feature: &f.name,
                    contribution: f.contribution,
                    stderr: f.stderr,
                    full_value: rep.full_value,
                    empty_value: rep.empty_value,
                    n_completed: rep.n_completed,
                })
            });
            write_csv(&dir.join("importance.csv"), rows)?;
            files.push("importance.csv".into());
        }
        Report::Simulate(r) => {
            write_csv(&dir.join("coverage.csv"), &r.study.cells)?;
            write_csv(&dir.join("replicates.csv"), &r.study.records)?;
            write_csv(&dir.join("truths.csv"), &r.study.truths)?;
            files.extend(["coverage.csv".into(), "replicates.csv".into(), "truths.csv".into()]);
        }
    }
    Ok(files)
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'a str,
    status: &'a str,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    elapsed_ms: u128,
    files: Vec<String>,
    error: Option<String>,
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Runs `config` and writes the report, flat tables and metadata into the
/// output directory. On failure no report is left behind and a failure
/// marker holds the diagnostic.
pub fn run(config: &RunConfig) -> Result<Report> {
    let dir = config.output.as_path();
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for stale in [REPORT_FILE, FAILURE_MARKER] {
        let p = dir.join(stale);
        if p.exists() {
            fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
        }
    }
    let started = unix_ms();
    let clock = Instant::now();
    let outcome = execute(config).and_then(|report| {
        let mut files = write_tables(&report, dir)?;
        let json = serde_json::to_string_pretty(&report)?;
        let path = dir.join(REPORT_FILE);
        fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
        files.insert(0, REPORT_FILE.into());
        Ok((report, files))
    });
    let (status, files, error) = match &outcome {
        Ok((_, files)) => ("ok", files.clone(), None),
        Err(e) => ("failed", Vec::new(), Some(e.to_string())),
    };
    if let Some(msg) = &error {
        let p = dir.join(FAILURE_MARKER);
        fs::write(&p, format!("{msg}\n")).map_err(|e| CliError::io(&p, e))?;
        let report = dir.join(REPORT_FILE);
        if report.exists() {
            fs::remove_file(&report).map_err(|e| CliError::io(&report, e))?;
        }
    }
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        status,
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        elapsed_ms: clock.elapsed().as_millis(),
        files,
        error,
    };
    let p = dir.join(METADATA_FILE);
    fs::write(&p, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| CliError::io(&p, e))?;
    outcome.map(|(r, _)| r)
}
