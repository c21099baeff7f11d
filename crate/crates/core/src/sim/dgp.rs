use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::discrete::DiscreteLaw;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// A simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum DgpSpec {
    /// `X` shifted by group, `Y|X` logistic with interactions.
    Setting1,
    /// `X ⟂ G`, `Y|X,G` logistic in `ΣX` with slope 0.5 (`G=0`) or 2 (`G=1`).
    Setting2,
    /// `Y|X` and `G|X` logistic in the squared covariates.
    Setting3,
    /// Shared latent `S` of weight `c` in both binarized `Y` and `G`.
    CmiSim {
        c: f64,
        #[serde(default = "default_beta")]
        beta: Vec<f64>,
    },
    DiscreteCustom { law: DiscreteLaw },
}

fn default_beta() -> Vec<f64> {
    vec![1.0; 3]
}

impl DgpSpec {
    pub fn cmi_sim(c: f64) -> Self {
        DgpSpec::CmiSim { c, beta: default_beta() }
    }

    /// Parses a bare design name; `cmi_sim` and `discrete_custom` need
    /// parameters and are built with their constructors instead.
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "setting1" => Ok(DgpSpec::Setting1),
            "setting2" => Ok(DgpSpec::Setting2),
            "setting3" => Ok(DgpSpec::Setting3),
            "discrete8" | "eight_cell" => Ok(DgpSpec::DiscreteCustom { law: DiscreteLaw::eight_cell() }),
            other => Err(Error::UnknownSpec(other.to_string())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            DgpSpec::Setting1 => "setting1".into(),
            DgpSpec::Setting2 => "setting2".into(),
            DgpSpec::Setting3 => "setting3".into(),
            DgpSpec::CmiSim { c, .. } => format!("cmi_sim(c={c})"),
            DgpSpec::DiscreteCustom { law } => format!("discrete_custom({} levels)", law.n_levels()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DgpSpec::CmiSim { c, beta } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::InvalidArgument(format!("cmi_sim needs c >= 0, got {c}")));
                }
                if beta.len() != 3 || beta.iter().any(|b| !b.is_finite()) {
                    return Err(Error::InvalidArgument("cmi_sim beta must have 3 finite entries".into()));
                }
                Ok(())
            }
            DgpSpec::DiscreteCustom { law } => law.validate(),
            _ => Ok(()),
        }
    }

    fn dim(&self) -> usize {
        match self {
            DgpSpec::Setting1 | DgpSpec::Setting2 | DgpSpec::Setting3 => 5,
            DgpSpec::CmiSim { .. } => 3,
            DgpSpec::DiscreteCustom { law } => law.n_feature_columns(),
        }
    }

    fn feature_names(&self) -> Vec<String> {
        match self {
            DgpSpec::DiscreteCustom { law } => law.feature_names(),
            _ => (1..=self.dim()).map(|j| format!("x{j}")).collect(),
        }
    }
}

/// Covariates drawn from a design together with their exact conditional
/// laws: `π(x) = P(G=1|x)` and `q_g(x) = P(Y=1|x, G=g)`.
#[derive(Debug, Clone)]
pub struct LatentSample {
    pub x: Array2<f64>,
    /// The group actually drawn for each row.
    pub g: Vec<u8>,
    pub pi: Vec<f64>,
    pub q1: Vec<f64>,
    pub q0: Vec<f64>,
}

impl LatentSample {
    /// `D(x) = P(Y=1|x)`.
    pub fn d(&self, i: usize) -> f64 {
        self.pi[i] * self.q1[i] + (1.0 - self.pi[i]) * self.q0[i]
    }

    /// `P(Y=y, G=g | x)` indexed `2y + g`.
    pub fn cells(&self, i: usize) -> [f64; 4] {
        let (p, q1, q0) = (self.pi[i], self.q1[i], self.q0[i]);
        [(1.0 - p) * (1.0 - q0), p * (1.0 - q1), (1.0 - p) * q0, p * q1]
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Unit variances with `Cov(X2,X3) = 0.5` and `Cov(X4,X5) = -0.5`.
pub fn settings_covariance() -> DMatrix<f64> {
    let mut s = DMatrix::identity(5, 5);
    s[(1, 2)] = 0.5;
    s[(2, 1)] = 0.5;
    s[(3, 4)] = -0.5;
    s[(4, 3)] = -0.5;
    s
}

/// Group-1 mean shift of Setting 1.
const SETTING1_SHIFT: [f64; 5] = [0.0, 0.5, 0.0, 0.0, -0.5];

fn mvn_rows(rng: &mut StreamRng, n: usize, cov: &DMatrix<f64>) -> Array2<f64> {
    let d = cov.nrows();
    let l = cov.clone().cholesky().expect("covariance is positive definite").unpack();
    let mut x = Array2::zeros((n, d));
    let mut z = DVector::zeros(d);
    for i in 0..n {
        for j in 0..d {
            z[j] = rng.sample::<f64, _>(StandardNormal);
        }
        let v = &l * &z;
        for j in 0..d {
            x[[i, j]] = v[j];
        }
    }
    x
}

fn setting1_logit(x: &[f64]) -> f64 {
    -2.0 * x[0] + 3.0 * x[1] - 4.0 * x[2] + 3.0 * x[3] - x[4] + 2.0 * x[1] * x[4] + x[2] * x[3]
}

fn setting3_y_logit(x: &[f64]) -> f64 {
    4.0 * x[0].powi(2) + 2.0 * x[1].powi(2) + x[2].powi(2) - 3.0 * x[3].powi(2) - 4.0 * x[4].powi(2)
}

fn setting3_g_logit(x: &[f64]) -> f64 {
    x[0].powi(2) + x[1].powi(2) - x[2].powi(2) - 2.0 * x[3].powi(2) + x[4].powi(2)
}

/// `∫₀¹ clamp(c s + b, 0, 1)^k ds` for `k ∈ {1, 2}`.
fn clamp_moment(c: f64, b: f64, k: i32) -> f64 {
    let kk = f64::from(k + 1);
    if c <= 0.0 {
        return b.clamp(0.0, 1.0).powi(k);
    }
    let anti = |t: f64| {
        if t <= 0.0 {
            0.0
        } else if t <= 1.0 {
            t.powf(kk) / kk
        } else {
            1.0 / kk + (t - 1.0)
        }
    };
    (anti(b + c) - anti(b)) / c
}

/// Exact `(P(Y=1, G=1 | z), P(Y=1 | z))` of the binarized CMI design, where
/// `Y = 1{(cS + U + f)/(c + 2) > 1/2}` and likewise for `G` with `V`.
pub fn cmi_cell_probs(c: f64, f: f64) -> (f64, f64) {
    // given S = s, P(Y = 1) = clamp(c s + f - c/2, 0, 1); U and V are
    // independent given S
    let b = f - 0.5 * c;
    (clamp_moment(c, b, 2), clamp_moment(c, b, 1))
}

/// Draws covariates and their exact conditional laws.
pub fn draw_latent(spec: &DgpSpec, n: usize, rng: &mut StreamRng) -> Result<LatentSample> {
    spec.validate()?;
    let mut g = Vec::with_capacity(n);
    let mut pi = Vec::with_capacity(n);
    let mut q1 = Vec::with_capacity(n);
    let mut q0 = Vec::with_capacity(n);
    let x = match spec {
        DgpSpec::Setting1 => {
            let cov = settings_covariance();
            let mut x = mvn_rows(rng, n, &cov);
            let inv = cov.clone().try_inverse().expect("invertible covariance");
            let mu = DVector::from_column_slice(&SETTING1_SHIFT);
            let a = &inv * &mu;
            let a0 = -0.5 * mu.dot(&a);
            for i in 0..n {
                let gi = u8::from(rng.random::<f64>() < 0.5);
                if gi == 1 {
                    for j in 0..5 {
                        x[[i, j]] += SETTING1_SHIFT[j];
                    }
                }
                let row: Vec<f64> = x.row(i).to_vec();
                let lo = a0 + (0..5).map(|j| a[j] * row[j]).sum::<f64>();
                let d = sigmoid(setting1_logit(&row));
                g.push(gi);
                pi.push(sigmoid(lo));
                q1.push(d);
                q0.push(d);
            }
            x
        }
        DgpSpec::Setting2 => {
            let x = mvn_rows(rng, n, &settings_covariance());
            for i in 0..n {
                let s: f64 = x.row(i).sum();
                g.push(u8::from(rng.random::<f64>() < 0.5));
                pi.push(0.5);
                q1.push(sigmoid(2.0 * s));
                q0.push(sigmoid(0.5 * s));
            }
            x
        }
        DgpSpec::Setting3 => {
            let x = mvn_rows(rng, n, &settings_covariance());
            for i in 0..n {
                let row: Vec<f64> = x.row(i).to_vec();
                let p = sigmoid(setting3_g_logit(&row));
                let d = sigmoid(setting3_y_logit(&row));
                g.push(u8::from(rng.random::<f64>() < p));
                pi.push(p);
                q1.push(d);
                q0.push(d);
            }
            x
        }
        DgpSpec::CmiSim { c, beta } => {
            let x = mvn_rows(rng, n, &DMatrix::identity(3, 3));
            for i in 0..n {
                let f = sigmoid((0..3).map(|j| beta[j] * x[[i, j]]).sum());
                let (p11, p1) = cmi_cell_probs(*c, f);
                // P(G=1|z) = P(Y=1|z) by symmetry of U and V
                g.push(u8::from(rng.random::<f64>() < p1));
                pi.push(p1);
                q1.push(if p1 > 0.0 { p11 / p1 } else { 0.0 });
                q0.push(if p1 < 1.0 { (p1 - p11) / (1.0 - p1) } else { 0.0 });
            }
            x
        }
        DgpSpec::DiscreteCustom { law } => {
            let mut x = Array2::zeros((n, law.n_feature_columns()));
            for i in 0..n {
                let (level, gi, _) = law.sample_cell(rng);
                law.encode_level(level, x.row_mut(i));
                let (p, a, b) = law.conditionals(level);
                g.push(gi);
                pi.push(p);
                q1.push(a);
                q0.push(b);
            }
            x
        }
    };
    Ok(LatentSample { x, g, pi, q1, q0 })
}

/// Draws a dataset of `n` rows from `spec`, reproducibly under `seed`.
pub fn generate(spec: &DgpSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = rng::rng_from_seed(seed);
    let (x, g, y) = match spec {
        DgpSpec::CmiSim { c, beta } => {
            spec.validate()?;
            let x = mvn_rows(&mut rng, n, &DMatrix::identity(3, 3));
            let mut g = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for i in 0..n {
                let f = sigmoid((0..3).map(|j| beta[j] * x[[i, j]]).sum());
                let s: f64 = rng.random();
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                let yc = (c * s + u + f) / (c + 2.0);
                let gc = (c * s + v + f) / (c + 2.0);
                // the construction is symmetric about 1/2, which is therefore
                // the median of both continuous variables
                y.push(u8::from(yc > 0.5));
                g.push(u8::from(gc > 0.5));
            }
            (x, g, y)
        }
        _ => {
            let lat = draw_latent(spec, n, &mut rng)?;
            let y = (0..n)
                .map(|i| {
                    let q = if lat.g[i] == 1 { lat.q1[i] } else { lat.q0[i] };
                    u8::from(rng.random::<f64>() < q)
                })
                .collect();
            (lat.x, lat.g, y)
        }
    };
    Dataset::new(x, g, y, spec.feature_names())
}
