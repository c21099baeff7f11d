//! Ridge-penalized (multinomial) logistic regression fitted by Newton's
//! method, i.e. iteratively reweighted least squares.
//!
//! Covariates are standardized internally. Class 0 is the reference class;
//! the binary model is the two-class case. Intercepts are unpenalized.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::config::LogisticParams;

#[derive(Debug, Clone)]
pub struct LogisticModel {
    n_classes: usize,
    mean: Array1<f64>,
    scale: Array1<f64>,
    /// (n_classes - 1) × (d + 1), intercept first, on the standardized scale.
    coef: Array2<f64>,
}

fn standardize(x: ArrayView2<'_, f64>) -> (Array1<f64>, Array1<f64>) {
    let n = x.nrows() as f64;
    let mean = x.mean_axis(Axis(0)).expect("non-empty design");
    let mut scale = Array1::zeros(x.ncols());
    for (j, col) in x.columns().into_iter().enumerate() {
        let var = col.iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n;
        scale[j] = if var > 1e-24 { var.sqrt() } else { 1.0 };
    }
    (mean, scale)
}

/// `[1, (x - mean) / scale]` for every row.
fn design(x: ArrayView2<'_, f64>, mean: &Array1<f64>, scale: &Array1<f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut z = Array2::ones((n, d + 1));
    for i in 0..n {
        for j in 0..d {
            z[[i, j + 1]] = (x[[i, j]] - mean[j]) / scale[j];
        }
    }
    z
}

fn softmax_into(eta: &[f64], out: &mut [f64]) {
    // class 0 has logit 0
    let m = eta.iter().fold(0.0f64, |a, &b| a.max(b));
    let e0 = (-m).exp();
    out[0] = e0;
    let mut s = e0;
    for (k, &e) in eta.iter().enumerate() {
        let v = (e - m).exp();
        out[k + 1] = v;
        s += v;
    }
    out.iter_mut().for_each(|v| *v /= s);
}

/// Penalized negative log-likelihood in closed form over a fixed design.
///
/// `theta` is laid out class-major over the `K - 1` non-reference classes,
/// each block being `[intercept, slopes...]` for the columns of `design`
/// (whose first column is expected to be all ones).
pub struct LogisticObjective<'a> {
    pub design: ArrayView2<'a, f64>,
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub ridge: f64,
}

impl LogisticObjective<'_> {
    fn probs(&self, theta: &[f64]) -> Array2<f64> {
        let (n, p) = self.design.dim();
        let km1 = self.n_classes - 1;
        let b = ArrayView2::from_shape((km1, p), theta).expect("theta layout");
        let eta = self.design.dot(&b.t());
        let mut probs = Array2::zeros((n, self.n_classes));
        let mut buf = vec![0.0; self.n_classes];
        for i in 0..n {
            let row: Vec<f64> = eta.row(i).to_vec();
            softmax_into(&row, &mut buf);
            probs.row_mut(i).assign(&ArrayView1::from(&buf[..]));
        }
        probs
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.value_and_gradient(theta).0
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let (n, p) = self.design.dim();
        let km1 = self.n_classes - 1;
        let probs = self.probs(theta);
        let mut loss = 0.0;
        let mut resid = Array2::zeros((n, km1));
        for i in 0..n {
            loss -= probs[[i, self.labels[i]]].max(1e-300).ln();
            for k in 0..km1 {
                resid[[i, k]] = probs[[i, k + 1]] - f64::from(self.labels[i] == k + 1);
            }
        }
        let grad_m = resid.t().dot(&self.design);
        let mut grad = grad_m.into_raw_vec_and_offset().0;
        for k in 0..km1 {
            for j in 1..p {
                let t = theta[k * p + j];
                loss += 0.5 * self.ridge * t * t;
                grad[k * p + j] += self.ridge * t;
            }
        }
        (loss, grad)
    }

    fn hessian(&self, probs: &Array2<f64>) -> DMatrix<f64> {
        let (_, p) = self.design.dim();
        let km1 = self.n_classes - 1;
        let dim = km1 * p;
        let mut h = DMatrix::zeros(dim, dim);
        for a in 0..km1 {
            for b in a..km1 {
                let w: Array1<f64> = probs
                    .rows()
                    .into_iter()
                    .map(|r| r[a + 1] * (f64::from(a == b) - r[b + 1]))
                    .collect();
                let wz = &self.design * &w.view().insert_axis(Axis(1));
                let block = self.design.t().dot(&wz);
                for i in 0..p {
                    for j in 0..p {
                        h[(a * p + i, b * p + j)] = block[[i, j]];
                        h[(b * p + j, a * p + i)] = block[[i, j]];
                    }
                }
            }
            for j in 1..p {
                h[(a * p + j, a * p + j)] += self.ridge;
            }
        }
        h
    }
}

fn solve_spd(h: DMatrix<f64>, g: &[f64]) -> Option<Vec<f64>> {
    let rhs = DVector::from_column_slice(g);
    let dim = h.nrows();
    let scale = (0..dim).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-12);
    for jitter in [0.0, 1e-12, 1e-9, 1e-6, 1e-3] {
        let mut hj = h.clone();
        if jitter > 0.0 {
            for i in 0..dim {
                hj[(i, i)] += jitter * scale;
            }
        }
        if let Some(ch) = hj.cholesky() {
            return Some(ch.solve(&rhs).iter().copied().collect());
        }
    }
    None
}

impl LogisticModel {
    pub(crate) fn fit(x: ArrayView2<'_, f64>, labels: &[usize], n_classes: usize, params: &LogisticParams) -> Self {
        let (n, d) = x.dim();
        let p = d + 1;
        let km1 = n_classes - 1;
        let (mean, scale) = standardize(x);
        let z = design(x, &mean, &scale);
        let obj = LogisticObjective { design: z.view(), labels, n_classes, ridge: params.ridge };

        let mut counts = vec![0.0f64; n_classes];
        labels.iter().for_each(|&l| counts[l] += 1.0);
        let freq: Vec<f64> = counts.iter().map(|&c| c.max(0.5) / n as f64).collect();
        let mut theta = vec![0.0; km1 * p];
        for k in 0..km1 {
            theta[k * p] = (freq[k + 1] / freq[0]).ln();
        }

        let (mut loss, mut grad) = obj.value_and_gradient(&theta);
        for _ in 0..params.max_iter {
            let probs = obj.probs(&theta);
            let Some(step) = solve_spd(obj.hessian(&probs), &grad) else { break };
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a - t * s).collect();
                let (l, g) = obj.value_and_gradient(&cand);
                if l.is_finite() && l <= loss {
                    accepted = Some((cand, l, g));
                    break;
                }
                t *= 0.5;
            }
            let Some((cand, l, g)) = accepted else { break };
            let max_step = step.iter().map(|s| (t * s).abs()).fold(0.0, f64::max);
            let max_theta = cand.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let improvement = loss - l;
            theta = cand;
            loss = l;
            grad = g;
            if max_step <= params.tol * (1.0 + max_theta) || improvement <= 1e-14 * (1.0 + loss.abs()) {
                break;
            }
        }
        let coef = Array2::from_shape_vec((km1, p), theta).expect("theta layout");
        Self { n_classes, mean, scale, coef }
    }

    pub(crate) fn predict_row(&self, row: ArrayView1<'_, f64>, out: &mut [f64]) {
        let km1 = self.n_classes - 1;
        let mut eta = vec![0.0; km1];
        for (k, e) in eta.iter_mut().enumerate() {
            let c = self.coef.row(k);
            let mut s = c[0];
            for j in 0..row.len() {
                s += c[j + 1] * (row[j] - self.mean[j]) / self.scale[j];
            }
            *e = s;
        }
        softmax_into(&eta, out);
    }

    pub(crate) fn coefficients(&self) -> Vec<(f64, Vec<f64>)> {
        self.coef
            .rows()
            .into_iter()
            .map(|c| {
                let slopes: Vec<f64> = (0..self.mean.len()).map(|j| c[j + 1] / self.scale[j]).collect();
                let intercept = c[0] - (0..self.mean.len()).map(|j| slopes[j] * self.mean[j]).sum::<f64>();
                (intercept, slopes)
            })
            .collect()
    }
}
