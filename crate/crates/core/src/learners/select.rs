//! Discrete super learner: pick the candidate with the lowest K-fold
//! cross-validated log-loss and refit it on every row.

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;

use super::config::LearnerConfig;
use super::metrics::log_loss;
use super::model::{CandidateScore, FittedModel, ProbabilityModel};
use crate::error::{Error, Result};
use crate::rng;

/// Fold index of every row, balanced and shuffled under `seed`.
fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, &[rng::label_hash("cv_folds")]));
    let mut fold = vec![0; n];
    for (pos, &i) in idx.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

fn cv_score(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    n_classes: usize,
    candidate: &LearnerConfig,
    fold: &[usize],
    folds: usize,
) -> Result<f64> {
    let n = labels.len();
    let mut total = 0.0;
    for f in 0..folds {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold[i] == f);
        let xt = x.select(Axis(0), &train);
        let lt: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let model = super::fit_classifier(xt.view(), &lt, n_classes, candidate)?;
        let xv = x.select(Axis(0), &test);
        let lv: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
        total += log_loss(model.predict_proba(xv.view()).view(), &lv) * test.len() as f64;
    }
    Ok(total / n as f64)
}

/// Cross-validated selection among `candidates`.
///
/// A candidate that fails on any fold is disqualified; ties go to the
/// earlier candidate. Fails with [`Error::NoViableCandidate`] when every
/// candidate fails.
pub fn cv_select(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    n_classes: usize,
    candidates: &[LearnerConfig],
    folds: usize,
    seed: u64,
) -> Result<FittedModel> {
    let n = labels.len();
    if folds < 2 || folds > n {
        return Err(Error::InvalidArgument(format!("{folds} folds for {n} rows")));
    }
    let fold = fold_assignment(n, folds, seed);
    let mut scores = Vec::with_capacity(candidates.len());
    let mut best: Option<(usize, f64)> = None;
    for (c, cand) in candidates.iter().enumerate() {
        match cv_score(x, labels, n_classes, cand, &fold, folds) {
            Ok(loss) if loss.is_finite() => {
                if best.is_none_or(|(_, b)| loss < b) {
                    best = Some((c, loss));
                }
                scores.push(CandidateScore { learner: cand.name(), cv_log_loss: Some(loss), error: None });
            }
            Ok(loss) => scores.push(CandidateScore {
                learner: cand.name(),
                cv_log_loss: None,
                error: Some(format!("non-finite cross-validated loss {loss}")),
            }),
            Err(e) => scores.push(CandidateScore { learner: cand.name(), cv_log_loss: None, error: Some(e.to_string()) }),
        }
    }
    let Some((winner, _)) = best else {
        let detail: Vec<String> = scores
            .iter()
            .map(|s| format!("{}: {}", s.learner, s.error.as_deref().unwrap_or("unknown")))
            .collect();
        return Err(Error::NoViableCandidate(detail.join("; ")));
    };
    let mut model = super::fit_classifier(x, labels, n_classes, &candidates[winner])?;
    model.info.selection = scores;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_balanced() {
        let f = fold_assignment(103, 5, 9);
        let mut c = [0; 5];
        f.iter().for_each(|&k| c[k] += 1);
        assert!(c.iter().all(|&k| k == 20 || k == 21));
        assert_eq!(f, fold_assignment(103, 5, 9));
    }
}
