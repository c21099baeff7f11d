use fairtl::estimators::{CmiMode, CmiSpec, FairnessMetric, MetricKind, MetricSpec};
use fairtl::learners::LearnerConfig;
use fairtl::sim::{
    generate, mc_truth, run_coverage_study, CmiReference, DgpSpec, DiscreteLaw, EstimatorConfig, Method, StudyConfig,
    Target,
};

fn column_mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (column_mean(a.iter().copied()), column_mean(b.iter().copied()));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() - 1) as f64
}

#[test]
fn setting1_moments() {
    let d = generate(&DgpSpec::Setting1, 100_000, 7).unwrap();
    let x = d.features();
    assert_eq!(x.ncols(), 5);
    let col = |j: usize| x.column(j).to_vec();
    assert!((covariance(&col(1), &col(2)) - 0.5).abs() < 0.02);
    assert!((covariance(&col(3), &col(4)) + 0.5).abs() < 0.02);
    assert!(covariance(&col(0), &col(1)).abs() < 0.02);
    let g = column_mean(d.group().iter().map(|&g| g as f64));
    assert!((g - 0.5).abs() < 0.01, "mean G {g}");
}

#[test]
fn setting2_features_are_independent_of_group() {
    let d = generate(&DgpSpec::Setting2, 100_000, 3).unwrap();
    let g: Vec<f64> = d.group().iter().map(|&g| g as f64).collect();
    for j in 0..d.n_features() {
        let c = covariance(&d.features().column(j).to_vec(), &g);
        assert!(c.abs() < 0.01, "column {j}: {c}");
    }
    let parity = Target::fairness(FairnessMetric::Parity, MetricKind::Probabilistic);
    assert!(mc_truth(&DgpSpec::Setting2, &parity, 200_000, 1).unwrap().value.abs() < 0.01);
}

#[test]
fn marginal_mi_table() {
    let table = [0.0598, 0.0735, 0.1109, 0.1712, 0.2459, 0.3005, 0.3443, 0.3787, 0.4063];
    for (i, want) in table.iter().enumerate() {
        let c = 0.5 * i as f64;
        let t = mc_truth(&DgpSpec::cmi_sim(c), &Target::cmi(CmiReference::Marginal), 400_000, 11).unwrap();
        assert!((t.value - want).abs() < 0.01, "c={c}: {} vs {want}", t.value);
    }
}

#[test]
fn conditional_cmi_vanishes_without_signal() {
    let t = mc_truth(&DgpSpec::cmi_sim(0.0), &Target::cmi(CmiReference::Conditional), 200_000, 2).unwrap();
    assert!(t.value.abs() < 1e-12);
    let t4 = mc_truth(&DgpSpec::cmi_sim(4.0), &Target::cmi(CmiReference::Conditional), 400_000, 2).unwrap();
    assert!((t4.value - 0.3966).abs() < 0.005, "{}", t4.value);
}

#[test]
fn mc_standard_error_shrinks_with_draws() {
    let target = Target::fairness(FairnessMetric::Parity, MetricKind::Traditional);
    let small = mc_truth(&DgpSpec::Setting1, &target, 100_000, 5).unwrap();
    let large = mc_truth(&DgpSpec::Setting1, &target, 400_000, 5).unwrap();
    let ratio = small.mc_se / large.mc_se;
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    assert!((small.value - large.value).abs() < 4.0 * small.mc_se);
}

#[test]
fn discrete_sample_matches_law() {
    let law = DiscreteLaw::eight_cell();
    let d = generate(&DgpSpec::DiscreteCustom { law }, 200_000, 9).unwrap();
    let x1 = column_mean(d.features().column(0).iter().copied());
    assert!((x1 - 0.5).abs() < 0.01);
    let y = column_mean(d.outcome().iter().map(|&y| y as f64));
    assert!((y - 0.5).abs() < 0.01);
}

fn small_study() -> StudyConfig {
    let learner = LearnerConfig::logistic();
    StudyConfig {
        master_seed: 42,
        replicates: 4,
        sample_sizes: vec![400],
        split_ratio: 0.5,
        level: 0.95,
        n_mc: 100_000,
        threads: 1,
        cmi_reference: CmiReference::Conditional,
        dgps: vec![DgpSpec::Setting1, DgpSpec::DiscreteCustom { law: DiscreteLaw::eight_cell() }],
        estimators: vec![
            EstimatorConfig::new("dp", Method::Fairness(MetricSpec::parity(MetricKind::Traditional).with_learner(learner.clone()))),
            EstimatorConfig::new("ttest", Method::TTest(MetricSpec::parity(MetricKind::Probabilistic).with_learner(learner.clone()))),
            EstimatorConfig::new("cmi", Method::Cmi(CmiSpec::new(CmiMode::Single).with_learner(learner))),
            EstimatorConfig::new("knn", Method::CmiKnn { k: 5 }),
        ],
    }
}

#[test]
fn study_is_deterministic_across_thread_counts() {
    let cfg = small_study();
    let a = run_coverage_study(&cfg).unwrap();
    let b = run_coverage_study(&StudyConfig { threads: 2, ..cfg }).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.cells.len(), 8);
    let cell = a.cell("setting1", "dp", 400).unwrap();
    assert_eq!(cell.replicates, 4);
    assert!(cell.coverage.is_some());
    assert!(a.cell("setting1", "knn", 400).unwrap().coverage.is_none());
    // estimators see the same data within a replicate
    let seeds: Vec<u64> = a.records_for("setting1", "dp", 400).map(|r| r.seed).collect();
    let seeds_knn: Vec<u64> = a.records_for("setting1", "knn", 400).map(|r| r.seed).collect();
    assert_eq!(seeds, seeds_knn);
}

#[test]
fn study_config_from_toml() {
    let src = r#"
        master_seed = 1
        replicates = 2
        sample_sizes = [500, 1000]
        n_mc = 100000

        [[dgps]]
        id = "setting3"

        [[dgps]]
        id = "cmi_sim"
        c = 1.5

        [[estimators]]
        name = "peo"
        method = "fairness"
        metric = "opportunity"
        kind = "probabilistic"

        [[estimators]]
        name = "cmi"
        method = "cmi"
        mode = "separate"

        [[estimators]]
        name = "knn"
        method = "cmi_knn"
        k = 7
    "#;
    let cfg = StudyConfig::from_toml_str(src).unwrap();
    assert_eq!(cfg.dgps, vec![DgpSpec::Setting3, DgpSpec::cmi_sim(1.5)]);
    assert_eq!(cfg.split_ratio, 0.5);
    match &cfg.estimators[0].method {
        Method::Fairness(s) => assert_eq!(s.outcome, LearnerConfig::super_learner()),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(cfg.estimators[2].method, Method::CmiKnn { k: 7 });
    assert!(StudyConfig::from_toml_str("replicates = 0\nsample_sizes=[1]\ndgps=[]\nestimators=[]").is_err());
}
