use crate::data::{Dataset, SplitPair};
use crate::error::{Error, Result};
use crate::inference::EstimateResult;
use crate::learners::ProbabilityModel;

use super::{FairnessMetric, MetricKind, MetricSpec, NuisanceSet, TRUNCATION_WARN_FRACTION, WEIGHT_CLIP};

/// One group's estimating equation
/// `Σᵢ [wᵢ rᵢ + aᵢ (vᵢ − Ψ)] = 0`,
/// with `a` the arm indicator, `w` the augmentation weight, `v` the plug-in
/// value and `r` the outcome residual. Returns `Ψ` and the per-row EIF
/// `(w r + a (v − Ψ)) / p̂` where `p̂ = mean(a)`.
pub(super) fn solve_arm(a: &[f64], w: &[f64], v: &[f64], r: &[f64]) -> (f64, Vec<f64>) {
    let m = a.len() as f64;
    let sum_a: f64 = a.iter().sum();
    let num: f64 = (0..a.len()).map(|i| w[i] * r[i] + a[i] * v[i]).sum();
    let psi = num / sum_a;
    let p_hat = sum_a / m;
    let eif = (0..a.len()).map(|i| (w[i] * r[i] + a[i] * (v[i] - psi)) / p_hat).collect();
    (psi, eif)
}

fn clip_weight(p: f64) -> (f64, bool) {
    let c = p.clamp(WEIGHT_CLIP, 1.0 - WEIGHT_CLIP);
    (c, c != p)
}

fn truncation_warning(what: &str, clipped: usize, m: usize) -> Option<String> {
    let frac = clipped as f64 / m as f64;
    (frac > TRUNCATION_WARN_FRACTION).then(|| {
        let msg = format!(
            "{what} clipped to [{WEIGHT_CLIP}, {}] on {clipped} of {m} rows ({:.1}%)",
            1.0 - WEIGHT_CLIP,
            100.0 * frac
        );
        log::warn!("{msg}");
        msg
    })
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn require_model<'a>(m: &'a Option<std::sync::Arc<dyn ProbabilityModel>>, what: &str) -> Result<&'a dyn ProbabilityModel> {
    m.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("nuisance set lacks the {what} model")))
}

fn check_groups(eval: &Dataset, metric: FairnessMetric) -> Result<()> {
    for g in [0u8, 1] {
        let present = match metric {
            FairnessMetric::Parity => eval.group().iter().any(|&v| v == g),
            FairnessMetric::Opportunity => eval.group().iter().zip(eval.outcome()).any(|(&v, &y)| v == g && y == 1),
        };
        if !present {
            return Err(match metric {
                FairnessMetric::Parity => Error::EmptyGroup { group: g },
                FairnessMetric::Opportunity => Error::EmptyPositiveGroup { group: g },
            });
        }
    }
    Ok(())
}

/// Evaluates a parity or opportunity estimator on `eval` with given nuisances.
pub fn fairness_with(eval: &Dataset, nuisances: &NuisanceSet, spec: &MetricSpec) -> Result<EstimateResult> {
    check_groups(eval, spec.metric)?;
    let m = eval.n();
    let x = eval.features();
    let g = eval.group();
    let y = eval.outcome();
    let d_hat = nuisances.d_model.predict_positive(x);
    let c = spec.threshold;

    let arm_indicator = |grp: u8| -> Vec<f64> {
        (0..m)
            .map(|i| match spec.metric {
                FairnessMetric::Parity => indicator(g[i] == grp),
                FairnessMetric::Opportunity => indicator(g[i] == grp && y[i] == 1),
            })
            .collect()
    };
    let a1 = arm_indicator(1);
    let a0 = arm_indicator(0);
    let mut warnings = Vec::new();

    let (arm1, arm0) = match spec.kind {
        MetricKind::Traditional => {
            let v: Vec<f64> = d_hat.iter().map(|&d| indicator(d >= c)).collect();
            let zero = vec![0.0; m];
            (solve_arm(&a1, &zero, &v, &zero), solve_arm(&a0, &zero, &v, &zero))
        }
        MetricKind::Probabilistic => {
            let r: Vec<f64> = (0..m).map(|i| f64::from(y[i]) - d_hat[i]).collect();
            let mut clipped = 0;
            let (w1, w0): (Vec<f64>, Vec<f64>) = match spec.metric {
                FairnessMetric::Parity => {
                    let pi = require_model(&nuisances.pi_model, "propensity")?.predict_positive(x);
                    pi.iter()
                        .map(|&p| {
                            let (pc, hit) = clip_weight(p);
                            clipped += usize::from(hit);
                            (pc, 1.0 - pc)
                        })
                        .unzip()
                }
                FairnessMetric::Opportunity => {
                    let joint = require_model(&nuisances.rho_model, "joint")?;
                    if joint.n_classes() != 4 {
                        return Err(Error::InvalidArgument("joint model must have 4 classes".into()));
                    }
                    let probs = joint.predict_proba(x);
                    probs
                        .rows()
                        .into_iter()
                        .map(|row| {
                            // classes are indexed 2y + g
                            let (r1, h1) = clip_weight(row[3]);
                            let (r0, h0) = clip_weight(row[2]);
                            clipped += usize::from(h1 || h0);
                            (r1, r0)
                        })
                        .unzip()
                }
            };
            let what = match spec.metric {
                FairnessMetric::Parity => "propensity",
                FairnessMetric::Opportunity => "joint weights",
            };
            warnings.extend(truncation_warning(what, clipped, m));
            (solve_arm(&a1, &w1, &d_hat, &r), solve_arm(&a0, &w0, &d_hat, &r))
        }
    };

    let point = arm1.0 - arm0.0;
    let eif: Vec<f64> = arm1.1.iter().zip(&arm0.1).map(|(p, q)| p - q).collect();
    let mut res = EstimateResult::from_eif(spec.metric_id(), point, eif, spec.level)?;
    res.models = nuisances.describe();
    res.warnings = warnings;
    Ok(res)
}

/// Parity estimator on `eval` with given nuisances.
pub fn parity_with(eval: &Dataset, nuisances: &NuisanceSet, spec: &MetricSpec) -> Result<EstimateResult> {
    expect_metric(spec, FairnessMetric::Parity)?;
    fairness_with(eval, nuisances, spec)
}

/// Equal-opportunity estimator on `eval` with given nuisances.
pub fn opportunity_with(eval: &Dataset, nuisances: &NuisanceSet, spec: &MetricSpec) -> Result<EstimateResult> {
    expect_metric(spec, FairnessMetric::Opportunity)?;
    fairness_with(eval, nuisances, spec)
}

fn expect_metric(spec: &MetricSpec, metric: FairnessMetric) -> Result<()> {
    if spec.metric != metric {
        return Err(Error::InvalidArgument(format!("spec is for {:?}, expected {metric:?}", spec.metric)));
    }
    Ok(())
}

/// Fits nuisances on the training split and evaluates on the evaluation split.
pub fn estimate_fairness(split: &SplitPair, spec: &MetricSpec) -> Result<EstimateResult> {
    check_groups(&split.eval, spec.metric)?;
    let nuisances = NuisanceSet::fit(&split.train, spec)?;
    fairness_with(&split.eval, &nuisances, spec)
}

pub fn estimate_parity(split: &SplitPair, spec: &MetricSpec) -> Result<EstimateResult> {
    expect_metric(spec, FairnessMetric::Parity)?;
    estimate_fairness(split, spec)
}

pub fn estimate_opportunity(split: &SplitPair, spec: &MetricSpec) -> Result<EstimateResult> {
    expect_metric(spec, FairnessMetric::Opportunity)?;
    estimate_fairness(split, spec)
}
