use ndarray::ArrayView2;

use super::model::PROB_FLOOR;

/// Mean negative log-likelihood of `labels` under the predicted class rows.
pub fn log_loss(probs: ArrayView2<'_, f64>, labels: &[usize]) -> f64 {
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| -probs[[i, l]].max(PROB_FLOOR).ln())
        .sum();
    total / labels.len() as f64
}

/// Expected calibration error over equal-width probability bins: the
/// count-weighted mean absolute gap between predicted and observed rates.
pub fn expected_calibration_error(predicted: &[f64], labels: &[u8], bins: usize) -> f64 {
    let mut sum_p = vec![0.0; bins];
    let mut sum_y = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (&p, &y) in predicted.iter().zip(labels) {
        let b = ((p * bins as f64) as usize).min(bins - 1);
        sum_p[b] += p;
        sum_y[b] += f64::from(y);
        count[b] += 1;
    }
    let n = predicted.len() as f64;
    (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| (sum_p[b] - sum_y[b]).abs() / n)
        .sum()
}
