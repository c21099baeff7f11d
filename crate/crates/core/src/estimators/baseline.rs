use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference::{EstimateResult, MetricId};
use crate::learners::ProbabilityModel;

use super::fairness::solve_arm;

/// Welch two-sample t-test of mean model output, group 1 minus group 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub diff: f64,
    pub stderr: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub n1: usize,
    pub n0: usize,
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn model_outputs(model: &dyn ProbabilityModel, eval: &Dataset, threshold: Option<f64>) -> Vec<f64> {
    let p = model.predict_positive(eval.features());
    match threshold {
        Some(c) => p.iter().map(|&v| if v >= c { 1.0 } else { 0.0 }).collect(),
        None => p,
    }
}

/// Treats each prediction on `eval` as an i.i.d. draw per group. With a
/// threshold the predictions are first mapped to `1{p ≥ c}`; without one
/// the raw probabilities are compared.
pub fn naive_model_ttest(
    model: &dyn ProbabilityModel,
    eval: &Dataset,
    threshold: Option<f64>,
    level: f64,
) -> Result<TTestResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level {level} not in (0,1)")));
    }
    let out = model_outputs(model, eval, threshold);
    let split = |grp: u8| -> Vec<f64> {
        out.iter().zip(eval.group()).filter(|(_, &g)| g == grp).map(|(&v, _)| v).collect()
    };
    let (s1, s0) = (split(1), split(0));
    for (grp, s) in [(1u8, &s1), (0u8, &s0)] {
        if s.is_empty() {
            return Err(Error::EmptyGroup { group: grp });
        }
        if s.len() < 2 {
            return Err(Error::InsufficientData { required: 2, actual: s.len() });
        }
    }
    let (m1, v1) = mean_var(&s1);
    let (m0, v0) = mean_var(&s0);
    let (n1, n0) = (s1.len() as f64, s0.len() as f64);
    let (a, b) = (v1 / n1, v0 / n0);
    let stderr = (a + b).sqrt();
    let diff = m1 - m0;
    let df = if stderr > 0.0 {
        (a + b).powi(2) / (a * a / (n1 - 1.0) + b * b / (n0 - 1.0))
    } else {
        n1 + n0 - 2.0
    };
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.5 * (1.0 + level));
    Ok(TTestResult {
        diff,
        stderr,
        df,
        ci_low: diff - t * stderr,
        ci_high: diff + t * stderr,
        level,
        n1: s1.len(),
        n0: s0.len(),
    })
}

/// Parity of a fixed model `m`: group means of `1{m(x) ≥ c}` with the
/// influence function `1{g}/f̂(g) · (m_c(x) − Ψ_g)` differenced across groups.
pub fn model_fairness_estimate(model: &dyn ProbabilityModel, eval: &Dataset, c: f64, level: f64) -> Result<EstimateResult> {
    let v = model_outputs(model, eval, Some(c));
    let m = eval.n();
    let zero = vec![0.0; m];
    let arm = |grp: u8| -> Result<(f64, Vec<f64>)> {
        let a: Vec<f64> = eval.group().iter().map(|&g| if g == grp { 1.0 } else { 0.0 }).collect();
        if a.iter().all(|&v| v == 0.0) {
            return Err(Error::EmptyGroup { group: grp });
        }
        Ok(solve_arm(&a, &zero, &v, &zero))
    };
    let (psi1, e1) = arm(1)?;
    let (psi0, e0) = arm(0)?;
    let eif = e1.iter().zip(&e0).map(|(p, q)| p - q).collect();
    let mut res = EstimateResult::from_eif(MetricId::ModelParity, psi1 - psi0, eif, level)?;
    res.models.push(format!("model: {}", model.describe()));
    Ok(res)
}
