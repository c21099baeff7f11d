//! Estimate results and Wald-type confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Parity,
    ProbabilisticParity,
    EqualOpportunity,
    ProbabilisticEqualOpportunity,
    Cmi,
    ModelParity,
}

impl MetricId {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Parity => "parity",
            MetricId::ProbabilisticParity => "prob_parity",
            MetricId::EqualOpportunity => "eq_opp",
            MetricId::ProbabilisticEqualOpportunity => "prob_eq_opp",
            MetricId::Cmi => "cmi",
            MetricId::ModelParity => "model_parity",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldInterval {
    pub low: f64,
    pub high: f64,
    pub stderr: f64,
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `point ± z_{(1+level)/2} · s / √m`, with `s` the sample standard
/// deviation (divisor `m - 1`) of the influence-function values.
pub fn wald_interval(point: f64, eif_values: &[f64], level: f64) -> Result<WaldInterval> {
    let m = eif_values.len();
    if m < 2 {
        return Err(Error::InsufficientData { required: 2, actual: m });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {level} not in (0,1)")));
    }
    let mean = eif_values.iter().sum::<f64>() / m as f64;
    let ss: f64 = eif_values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let stderr = (ss / (m - 1) as f64).sqrt() / (m as f64).sqrt();
    let half = normal_quantile(0.5 * (1.0 + level)) * stderr;
    Ok(WaldInterval { low: point - half, high: point + half, stderr })
}

/// Output of an estimating-equation estimator evaluated on `n_eval` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub metric: MetricId,
    pub point: f64,
    #[serde(skip)]
    pub eif_values: Vec<f64>,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub n_eval: usize,
    /// Description of each nuisance model the estimate was built from.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EstimateResult {
    pub fn from_eif(metric: MetricId, point: f64, eif_values: Vec<f64>, level: f64) -> Result<Self> {
        let ci = wald_interval(point, &eif_values, level)?;
        Ok(Self {
            metric,
            point,
            n_eval: eif_values.len(),
            eif_values,
            stderr: ci.stderr,
            ci_low: ci.low,
            ci_high: ci.high,
            level,
            models: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    pub fn eif_mean(&self) -> f64 {
        self.eif_values.iter().sum::<f64>() / self.eif_values.len().max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_variance_gives_degenerate_interval() {
        let ci = wald_interval(0.0, &[0.0; 10], 0.95).unwrap();
        assert_eq!((ci.low, ci.high, ci.stderr), (0.0, 0.0, 0.0));
    }

    #[test]
    fn plus_minus_one_sequence() {
        // s = sqrt(200/199) for 100 copies each of -1 and 1
        let eif: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let ci = wald_interval(0.0, &eif, 0.95).unwrap();
        let s = (200.0f64 / 199.0).sqrt();
        assert_abs_diff_eq!(ci.stderr, s / 200f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(ci.stderr, 0.0707, epsilon = 2e-4);
        assert_abs_diff_eq!(ci.high, 0.1386, epsilon = 5e-4);
        assert_abs_diff_eq!(ci.low, -ci.high, epsilon = 1e-15);
    }

    #[test]
    fn uses_exact_normal_quantile() {
        assert_abs_diff_eq!(normal_quantile(0.975), 1.959964, epsilon = 1e-6);
        let eif = [1.0, -1.0];
        let ci = wald_interval(0.0, &eif, 0.95).unwrap();
        assert_abs_diff_eq!(ci.high / ci.stderr, 1.959963984540054, epsilon = 1e-9);
    }

    #[test]
    fn table_style_interval_is_reproducible() {
        // The half-width 0.01 around 0.17 corresponds to stderr 0.01 / 1.96.
        let target_se = 0.01 / normal_quantile(0.975);
        let m = 1000usize;
        let s = target_se * (m as f64).sqrt() * (((m - 1) as f64) / m as f64).sqrt();
        let eif: Vec<f64> = (0..m).map(|i| if i % 2 == 0 { s } else { -s }).collect();
        let ci = wald_interval(0.17, &eif, 0.95).unwrap();
        assert_abs_diff_eq!(ci.low, 0.16, epsilon = 1e-12);
        assert_abs_diff_eq!(ci.high, 0.18, epsilon = 1e-12);
    }

    #[test]
    fn rejects_short_input() {
        assert!(matches!(
            wald_interval(0.0, &[1.0], 0.95),
            Err(Error::InsufficientData { required: 2, actual: 1 })
        ));
        assert!(wald_interval(0.0, &[1.0, 2.0], 1.0).is_err());
    }
}
