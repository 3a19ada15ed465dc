use hasqoe::baselines::{BaselineKind, BaselineModel};
use hasqoe::fitting::{extract_all, fit_features};
use hasqoe::*;

fn clean_dataset(n: usize, seed: u64) -> LabeledDataset {
    let config = GeneratorConfig {
        rng_seed: seed,
        ..Default::default()
    };
    let options = LabelOptions {
        reject_clamped: true,
        ..Default::default()
    };
    generate_labeled_dataset(&config, n, &ModelWeights::reference(), &options).unwrap()
}

fn max_abs_diff(a: &ModelWeights, b: &ModelWeights) -> f64 {
    a.to_vector()
        .iter()
        .zip(b.to_vector())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn planted_weights_are_recovered() {
    let ds = clean_dataset(400, 3);
    let report = fit(&ds, &BinningConfig::default()).unwrap();
    assert_eq!(report.rank, N_FEATURES);
    assert!(!report.condition_warning);
    assert!(max_abs_diff(report.weights(), &ModelWeights::reference()) < 1e-6);
    assert!(report.training_rmse < 1e-9);
}

#[test]
fn fit_is_a_fixed_point_and_scales_linearly() {
    let ds = clean_dataset(300, 4);
    let cfg = BinningConfig::default();
    let w = *fit(&ds, &cfg).unwrap().weights();
    let features = extract_all(ds.sessions(), &cfg).unwrap();

    // relabel with the fitted weights and refit
    let relabeled: Vec<f64> = features
        .iter()
        .map(|f| hasqoe::model::unclamped_score(f, &w))
        .collect();
    let again = fit_features(&features, &relabeled, FitOptions::default()).unwrap();
    assert!(max_abs_diff(again.weights(), &w) < 1e-9);

    let c = 1.7;
    let scaled: Vec<f64> = ds.labels().iter().map(|y| c * y).collect();
    let fitted = fit_features(&features, &scaled, FitOptions::default()).unwrap();
    assert!(max_abs_diff(fitted.weights(), &w.scaled(c)) < 1e-9);
}

#[test]
fn fitting_is_deterministic() {
    let ds = clean_dataset(120, 5);
    let cfg = BinningConfig::default();
    let a = fit(&ds, &cfg).unwrap().to_json();
    let b = fit(&ds, &cfg).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn nonnegative_fit_respects_constraint() {
    let config = GeneratorConfig {
        rng_seed: 6,
        ..Default::default()
    };
    let options = LabelOptions {
        noise_sd: 0.3,
        ..Default::default()
    };
    let ds = generate_labeled_dataset(&config, 300, &ModelWeights::reference(), &options).unwrap();
    let report = fit_with(
        &ds,
        &BinningConfig::default(),
        FitOptions { nonnegative: true },
    )
    .unwrap();
    assert!(report.weights().to_vector().iter().all(|&w| w >= 0.0));

    // on clean data the constraint is inactive
    let clean = clean_dataset(300, 6);
    let report = fit_with(
        &clean,
        &BinningConfig::default(),
        FitOptions { nonnegative: true },
    )
    .unwrap();
    assert!(max_abs_diff(report.weights(), &ModelWeights::reference()) < 1e-6);
}

#[test]
fn single_level_dataset_warns_about_rank() {
    let sessions = (0..30)
        .map(|k| {
            SessionTrace::constant(4.0, 10 + k)
                .unwrap()
                .with_mos(3.9)
                .unwrap()
        })
        .collect();
    let report = fit(
        &LabeledDataset::new(sessions).unwrap(),
        &BinningConfig::default(),
    )
    .unwrap();
    assert!(report.condition_warning);
    assert!(report.rank < N_FEATURES);
    assert!(report.weights().to_vector().iter().all(|w| w.is_finite()));
}

#[test]
fn splits_partition_the_dataset() {
    let ds = clean_dataset(250, 7);
    let protocol = SplitProtocol::standard(99);
    for k in 0..protocol.n_repetitions {
        let (train, test) = protocol.split_indices(ds.sessions(), k).unwrap();
        assert_eq!(test.len(), 90);
        assert_eq!(train.len() + test.len(), ds.len());
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert!(all.iter().enumerate().all(|(i, &j)| i == j));
        assert!(test
            .iter()
            .all(|&i| ds.sessions()[i].factor_tag() == FactorTag::MultiFactor));
    }
}

#[test]
fn parallel_and_serial_protocols_agree() {
    let ds = clean_dataset(250, 8);
    let protocol = SplitProtocol::standard(1);
    let model = BaselineModel::fitted(BaselineKind::Liu);
    let par = run_split_protocol(&ds, &protocol, &model, Compensation::Training).unwrap();
    let ser = hasqoe::evaluation::run_split_protocol_serial(
        &ds,
        &protocol,
        &model,
        Compensation::Training,
    )
    .unwrap();
    assert_eq!(par.to_json(), ser.to_json());
}

#[test]
fn fixed_model_without_compensation_scores_test_set_directly() {
    let ds = clean_dataset(250, 9);
    let protocol = SplitProtocol {
        n_repetitions: 5,
        ..SplitProtocol::standard(2)
    };
    let model = FittedHistogram::default();
    let report = run_split_protocol(&ds, &protocol, &model, Compensation::None).unwrap();
    assert!(report.slope.is_none() && report.intercept.is_none());
    for split in report.per_split.as_ref().unwrap() {
        let (train, test) = protocol.split_indices(ds.sessions(), split.split).unwrap();
        let train: Vec<_> = train.iter().map(|&i| ds.sessions()[i].clone()).collect();
        let test: Vec<_> = test.iter().map(|&i| ds.sessions()[i].clone()).collect();
        let truth: Vec<f64> = test.iter().map(|s| s.ground_truth_mos().unwrap()).collect();
        let pred = model.train(&train).unwrap().predict(&test).unwrap();
        assert_eq!(split.pcc, pcc(&pred, &truth).unwrap());
        assert_eq!(split.rmse, rmse(&pred, &truth).unwrap());
    }
}

fn labeled_with(config: GeneratorConfig, n: usize) -> Vec<SessionTrace> {
    let options = LabelOptions {
        reject_clamped: true,
        ..Default::default()
    };
    generate_labeled_dataset(&config, n, &ModelWeights::reference(), &options)
        .unwrap()
        .into_sessions()
}

/// 84 switch-only and 84 stall-only sessions plus 120 sessions with both.
fn mixed_288() -> LabeledDataset {
    let switches = labeled_with(
        GeneratorConfig {
            stall_prob_per_boundary: 0.0,
            rng_seed: 20,
            ..Default::default()
        },
        84,
    );
    let stalls = labeled_with(
        GeneratorConfig {
            transition: hasqoe::synth::Transition {
                up: 0.0,
                down: 0.0,
                stay: 1.0,
            },
            stall_prob_per_boundary: 0.2,
            jitter: 0.2,
            rng_seed: 21,
            ..Default::default()
        },
        84,
    );
    let multi: Vec<_> = labeled_with(
        GeneratorConfig {
            rng_seed: 22,
            ..Default::default()
        },
        600,
    )
    .into_iter()
    .filter(|s| s.factor_tag() == FactorTag::MultiFactor)
    .take(120)
    .collect();
    assert!(switches
        .iter()
        .chain(&stalls)
        .all(|s| s.factor_tag() == FactorTag::SingleFactor));
    let sessions: Vec<_> = switches.into_iter().chain(stalls).chain(multi).collect();
    assert_eq!(sessions.len(), 288);
    LabeledDataset::new(sessions).unwrap()
}

#[test]
fn mixed_dataset_of_288_sessions_is_fit_exactly() {
    let ds = mixed_288();
    let report = run_split_protocol(
        &ds,
        &SplitProtocol::standard(0),
        &FittedHistogram::default(),
        Compensation::None,
    )
    .unwrap();
    assert!(report.pcc >= 0.999, "{}", report.pcc);
    assert!(report.rmse <= 0.02, "{}", report.rmse);
}

#[test]
fn too_small_test_pool_is_usage_error() {
    let ds = clean_dataset(60, 11);
    let err = run_split_protocol(
        &ds,
        &SplitProtocol::standard(0),
        &FittedHistogram::default(),
        Compensation::Training,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Usage(_)));
}

#[test]
fn fitted_baseline_reproduces_its_own_predictions() {
    let ds = clean_dataset(200, 12);
    let model = BaselineModel::fitted(BaselineKind::Vriendt);
    let first = model
        .train(ds.sessions())
        .unwrap()
        .predict(ds.sessions())
        .unwrap();
    let second = model
        .train(ds.sessions())
        .unwrap()
        .predict(ds.sessions())
        .unwrap();
    assert_eq!(
        first.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
        second.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
    );
    assert!(first.iter().all(|p| (1.0..=5.0).contains(p)));
}
