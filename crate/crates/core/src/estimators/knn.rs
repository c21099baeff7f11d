//! k-nearest-neighbour CMI estimate for discrete `Y`, `G` and continuous `X`.
//!
//! Distances are max-norm on `X`; the discrete coordinates must match
//! exactly, so a point's neighbourhood radius `ρᵢ` is its `k`-th nearest
//! neighbour distance inside its own `(y, g)` cell. With `k̃ᵢ` the number of
//! cell members within `ρᵢ` (ties included) and `n_yx`, `n_gx`, `n_x` the
//! counts within `ρᵢ` in the `(Y,X)`, `(G,X)` and `X` subspaces, all
//! excluding the point itself,
//!
//! `ξᵢ = ψ(k̃ᵢ) − ψ(n_yx) − ψ(n_gx) + ψ(n_x)`
//!
//! and the estimate is the mean of `ξᵢ`. Cells smaller than `k + 1` use all
//! of their other members; points alone in their cell are skipped.

use rayon::prelude::*;
use statrs::function::gamma::digamma;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub fn estimate_cmi_knn(data: &Dataset, k: usize) -> Result<f64> {
    let n = data.n();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let x = data.features();
    let y = data.outcome();
    let g = data.group();

    let xi: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = x.row(i);
            let dist: Vec<f64> = x
                .rows()
                .into_iter()
                .map(|other| row.iter().zip(other.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .collect();
            let mut cell: Vec<f64> = (0..n)
                .filter(|&j| j != i && y[j] == y[i] && g[j] == g[i])
                .map(|j| dist[j])
                .collect();
            if cell.is_empty() {
                return None;
            }
            let kk = k.min(cell.len());
            let (_, rho, _) = cell.select_nth_unstable_by(kk - 1, |a, b| a.total_cmp(b));
            let rho = *rho;
            let (mut k_tilde, mut n_yx, mut n_gx, mut n_x) = (0usize, 0usize, 0usize, 0usize);
            for j in (0..n).filter(|&j| j != i && dist[j] <= rho) {
                n_x += 1;
                let same_y = y[j] == y[i];
                let same_g = g[j] == g[i];
                n_yx += usize::from(same_y);
                n_gx += usize::from(same_g);
                k_tilde += usize::from(same_y && same_g);
            }
            Some(digamma(k_tilde as f64) - digamma(n_yx as f64) - digamma(n_gx as f64) + digamma(n_x as f64))
        })
        .collect();
    let used: Vec<f64> = xi.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::InsufficientData { required: 2, actual: 1 });
    }
    Ok(used.iter().sum::<f64>() / used.len() as f64)
}
