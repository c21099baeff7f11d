use super::*;
use crate::rng::rng_from_seed;
use ndarray::Array2;
use rand::Rng;

fn logistic_data(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = rng_from_seed(seed);
    let x: Array2<f64> = Array2::from_shape_fn((n, 2), |_| rng.random_range(-2.0..2.0));
    let y = (0..n)
        .map(|i| {
            let p = 1.0 / (1.0 + (-(0.5 + 1.5 * x[[i, 0]] - x[[i, 1]])).exp());
            u8::from(rng.random::<f64>() < p)
        })
        .collect();
    (x, y)
}

#[test]
fn logistic_recovers_coefficients() {
    let (x, y) = logistic_data(20_000, 1);
    let m = fit_binary(x.view(), &y, &LearnerConfig::logistic()).unwrap();
    let (b0, b) = &m.logistic_coefficients().unwrap()[0];
    assert!((b0 - 0.5).abs() < 0.08, "{b0}");
    assert!((b[0] - 1.5).abs() < 0.08 && (b[1] + 1.0).abs() < 0.08, "{b:?}");
}

#[test]
fn gbt_training_loss_never_increases() {
    let (x, y) = logistic_data(2_000, 2);
    let m = fit_binary(x.view(), &y, &LearnerConfig::gbt()).unwrap();
    let l = m.boosting_losses().unwrap();
    assert_eq!(l.len(), 201);
    assert!(l.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn single_class_labels_rejected() {
    let x = Array2::zeros((20, 1));
    let err = fit_binary(x.view(), &[1; 20], &LearnerConfig::logistic()).unwrap_err();
    assert_eq!(err, Error::SingleClassLabels { class: 1 });
}

#[test]
fn calibration_needs_a_big_enough_holdout() {
    let (x, y) = logistic_data(100, 3);
    let err = fit_binary(x.view(), &y, &LearnerConfig::logistic().calibrated()).unwrap_err();
    assert_eq!(err, Error::HoldoutTooSmall { required: 50, actual: 20 });
    let (x, y) = logistic_data(1_000, 3);
    let m = fit_binary(x.view(), &y, &LearnerConfig::gbt().calibrated()).unwrap();
    assert_eq!(m.info.learner, "gbt+isotonic");
    assert_eq!(m.info.n_train, 1_000);
}

#[test]
fn non_finite_features_rejected() {
    let (mut x, y) = logistic_data(50, 4);
    x[[7, 1]] = f64::NAN;
    let err = fit_binary(x.view(), &y, &LearnerConfig::logistic()).unwrap_err();
    assert_eq!(err, Error::NonFiniteFeature { row: 7, column: 1 });
}

#[test]
fn cv_select_prefers_the_informative_model() {
    let (x, y) = logistic_data(1_500, 5);
    let cfg = LearnerConfig::cv_select(vec![LearnerConfig::constant(), LearnerConfig::logistic()], 3);
    let m = fit_binary(x.view(), &y, &cfg).unwrap();
    assert_eq!(m.info.learner, "logistic");
    assert_eq!(m.info.selection.len(), 2);
    assert!(m.info.selection[1].cv_log_loss < m.info.selection[0].cv_log_loss);
}

#[test]
fn cv_select_skips_failing_candidates() {
    let (x, y) = logistic_data(200, 6);
    // a 40-row fold cannot host a 50-row calibration holdout
    let cfg = LearnerConfig::cv_select(vec![LearnerConfig::logistic().calibrated(), LearnerConfig::constant()], 5);
    let m = fit_binary(x.view(), &y, &cfg).unwrap();
    assert_eq!(m.info.learner, "constant");
    assert!(m.info.selection[0].error.is_some());
    let only_bad = LearnerConfig::cv_select(vec![LearnerConfig::logistic().calibrated()], 5);
    assert!(matches!(fit_binary(x.view(), &y, &only_bad), Err(Error::NoViableCandidate(_))));
}

#[test]
fn joint_model_rows_are_distributions() {
    let (x, y) = logistic_data(800, 7);
    let g: Vec<u8> = (0..800).map(|i| u8::from(x[[i, 1]] > 0.0)).collect();
    for cfg in [LearnerConfig::logistic(), LearnerConfig::gbt()] {
        let m = fit_joint(x.view(), &y, &g, &cfg).unwrap();
        let p = m.predict_proba(x.view());
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| v >= PROB_FLOOR * 0.99));
        }
    }
}

#[test]
fn empty_joint_cell_is_a_warning() {
    let (x, y) = logistic_data(300, 8);
    let g: Vec<u8> = y.iter().map(|&v| v).collect();
    let m = fit_joint(x.view(), &y, &g, &LearnerConfig::logistic()).unwrap();
    assert_eq!(m.info.warnings.len(), 2);
}

#[test]
fn fits_are_deterministic() {
    let (x, y) = logistic_data(500, 9);
    let cfg = LearnerConfig::gbt_with(GbtParams { subsample: 0.7, n_trees: 30, ..GbtParams::default() }).with_seed(4);
    let a = fit_binary(x.view(), &y, &cfg).unwrap().predict_positive(x.view());
    let b = fit_binary(x.view(), &y, &cfg).unwrap().predict_positive(x.view());
    assert_eq!(a, b);
}
