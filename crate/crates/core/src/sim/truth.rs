//! Ground-truth estimand values: exact enumeration for discrete laws and
//! Rao–Blackwellized Monte Carlo over `X` for the continuous designs.
//!
//! Both paths evaluate the same functional of the per-`x` conditional laws
//! `π(x)`, `q₁(x)`, `q₀(x)`; they differ only in the weights on `x`.

use serde::{Deserialize, Serialize};

use super::dgp::{draw_latent, DgpSpec};
use super::discrete::DiscreteLaw;
use crate::error::{Error, Result};
use crate::estimators::{FairnessMetric, MetricKind, MetricSpec};
use crate::rng;

/// Which CMI-type quantity a truth refers to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmiReference {
    /// `E[log p(y,g|x) / (p(y|x) p(g|x))]`, the quantity the CMI estimators
    /// target.
    #[default]
    Conditional,
    /// Mutual information of `(Y, G)` with `X` integrated out.
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum Target {
    Fairness {
        metric: FairnessMetric,
        kind: MetricKind,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    Cmi {
        #[serde(default)]
        reference: CmiReference,
    },
}

fn default_threshold() -> f64 {
    0.5
}

impl Target {
    pub fn fairness(metric: FairnessMetric, kind: MetricKind) -> Self {
        Target::Fairness { metric, kind, threshold: 0.5 }
    }

    pub fn cmi(reference: CmiReference) -> Self {
        Target::Cmi { reference }
    }

    pub fn from_spec(spec: &MetricSpec) -> Self {
        Target::Fairness { metric: spec.metric, kind: spec.kind, threshold: spec.threshold }
    }

    pub fn label(&self) -> String {
        match self {
            Target::Fairness { metric, kind, threshold } => format!("{metric:?}/{kind:?}/c={threshold}").to_lowercase(),
            Target::Cmi { reference } => format!("cmi/{reference:?}").to_lowercase(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub value: f64,
    /// Monte Carlo standard error; zero for exact enumeration.
    pub mc_se: f64,
    /// Monte Carlo sample size; zero for exact enumeration.
    pub n_mc: usize,
}

/// Per-`x` conditional law with its weight.
#[derive(Clone, Copy)]
struct Point {
    w: f64,
    pi: f64,
    q1: f64,
    q0: f64,
}

impl Point {
    fn cells(&self) -> [f64; 4] {
        let (p, q1, q0) = (self.pi, self.q1, self.q0);
        [(1.0 - p) * (1.0 - q0), p * (1.0 - q1), (1.0 - p) * q0, p * q1]
    }

    fn d(&self) -> f64 {
        self.pi * self.q1 + (1.0 - self.pi) * self.q0
    }
}

fn xlogy_ratio(p: f64, denom: f64) -> f64 {
    if p > 0.0 {
        p * (p / denom).ln()
    } else {
        0.0
    }
}

fn point_cmi(pt: &Point) -> f64 {
    let c = pt.cells();
    let py = [c[0] + c[1], c[2] + c[3]];
    let pg = [c[0] + c[2], c[1] + c[3]];
    (0..4).map(|k| xlogy_ratio(c[k], py[k / 2] * pg[k % 2])).sum()
}

/// Functional value and, per point, its influence-function contribution
/// (meaningful when the points are an i.i.d. sample with equal weights).
fn evaluate(points: &[Point], target: &Target) -> Result<(f64, Vec<f64>)> {
    match *target {
        Target::Fairness { metric, kind, threshold } => {
            let v = |pt: &Point| {
                let d = pt.d();
                match kind {
                    MetricKind::Traditional => f64::from(u8::from(d >= threshold)),
                    MetricKind::Probabilistic => d,
                }
            };
            // arm g: ratio of E[b v] to E[b] with b = P(G=g [, Y=1] | x)
            let b = |pt: &Point, g: u8| {
                let (pg, q) = if g == 1 { (pt.pi, pt.q1) } else { (1.0 - pt.pi, pt.q0) };
                match metric {
                    FairnessMetric::Parity => pg,
                    FairnessMetric::Opportunity => pg * q,
                }
            };
            let mut arms = [(0.0, 0.0); 2];
            for pt in points {
                for g in 0..2u8 {
                    let bb = b(pt, g);
                    arms[g as usize].0 += pt.w * bb * v(pt);
                    arms[g as usize].1 += pt.w * bb;
                }
            }
            for (g, arm) in arms.iter().enumerate() {
                if arm.1 <= 0.0 {
                    return Err(Error::InvalidDistribution(format!("arm G={g} has zero probability")));
                }
            }
            let r = [arms[0].0 / arms[0].1, arms[1].0 / arms[1].1];
            let inf = points
                .iter()
                .map(|pt| {
                    let f = |g: u8| b(pt, g) * (v(pt) - r[g as usize]) / arms[g as usize].1;
                    f(1) - f(0)
                })
                .collect();
            Ok((r[1] - r[0], inf))
        }
        Target::Cmi { reference: CmiReference::Conditional } => {
            let vals: Vec<f64> = points.iter().map(point_cmi).collect();
            let value: f64 = points.iter().zip(&vals).map(|(pt, v)| pt.w * v).sum();
            Ok((value, vals.iter().map(|v| v - value).collect()))
        }
        Target::Cmi { reference: CmiReference::Marginal } => {
            let mut m = [0.0; 4];
            for pt in points {
                for (k, c) in pt.cells().iter().enumerate() {
                    m[k] += pt.w * c;
                }
            }
            let py = [m[0] + m[1], m[2] + m[3]];
            let pg = [m[0] + m[2], m[1] + m[3]];
            let value: f64 = (0..4).map(|k| xlogy_ratio(m[k], py[k / 2] * pg[k % 2])).sum();
            let grad: Vec<f64> = (0..4)
                .map(|k| if m[k] > 0.0 { (m[k] / (py[k / 2] * pg[k % 2])).ln() } else { 0.0 })
                .collect();
            let inf = points
                .iter()
                .map(|pt| pt.cells().iter().enumerate().map(|(k, c)| grad[k] * (c - m[k])).sum())
                .collect();
            Ok((value, inf))
        }
    }
}

/// Exact value of `target` under a discrete law.
pub fn brute_force_estimand(law: &DiscreteLaw, target: &Target) -> Result<f64> {
    law.validate()?;
    let points: Vec<Point> = (0..law.n_levels())
        .filter(|&x| law.p_x(x) > 0.0)
        .map(|x| {
            let (pi, q1, q0) = law.conditionals(x);
            Point { w: law.p_x(x), pi, q1, q0 }
        })
        .collect();
    Ok(evaluate(&points, target)?.0)
}

/// Minimum Monte Carlo sample size accepted by [`mc_truth`].
pub const MIN_MC: usize = 100_000;

/// Ground truth of `target` under `spec`. Discrete laws are enumerated
/// exactly; continuous designs average the exact conditional laws over
/// `n_mc` covariate draws.
pub fn mc_truth(spec: &DgpSpec, target: &Target, n_mc: usize, seed: u64) -> Result<Truth> {
    if let DgpSpec::DiscreteCustom { law } = spec {
        return Ok(Truth { value: brute_force_estimand(law, target)?, mc_se: 0.0, n_mc: 0 });
    }
    if n_mc < MIN_MC {
        return Err(Error::InvalidArgument(format!("n_mc must be at least {MIN_MC}, got {n_mc}")));
    }
    let mut r = rng::stream(seed, &[rng::label_hash("mc_truth")]);
    let lat = draw_latent(spec, n_mc, &mut r)?;
    let w = 1.0 / n_mc as f64;
    let points: Vec<Point> = (0..n_mc)
        .map(|i| Point { w, pi: lat.pi[i], q1: lat.q1[i], q0: lat.q0[i] })
        .collect();
    let (value, inf) = evaluate(&points, target)?;
    let mean = inf.iter().sum::<f64>() / n_mc as f64;
    let var = inf.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_mc - 1) as f64;
    Ok(Truth { value, mc_se: (var / n_mc as f64).sqrt(), n_mc })
}
