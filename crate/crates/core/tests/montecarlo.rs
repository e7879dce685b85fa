use strahler::montecarlo::{ReportBody, CHUNK_TRIALS};
use strahler::{
    branch_counts, exact_pmf, rate, run_clt_experiment, run_horton_check, run_ld_experiment,
    sample_tree, Arithmetic, Error, ExperimentConfig, TailSide, TreeSeed,
};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn cells(body: &ReportBody) -> &[strahler::montecarlo::TailCell] {
    match body {
        ReportBody::LargeDeviation { cells } => cells,
        other => panic!("expected tail cells, got {other:?}"),
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    // spans several chunks, including a ragged last one
    let trials = 3 * CHUNK_TRIALS + 17;
    let ld = ExperimentConfig::new(1, 64, trials, 9).with_y_grid(vec![0.2, 0.3]);
    let clt = ExperimentConfig::new(1, 64, trials, 9);
    let horton = ExperimentConfig::new(2, 64, trials, 9);
    let run = || {
        (
            run_ld_experiment(&ld).unwrap(),
            run_clt_experiment(&clt).unwrap(),
            run_horton_check(&horton).unwrap(),
        )
    };
    let one = in_pool(1, run);
    let three = in_pool(3, run);
    assert_eq!(one, three);
    assert_eq!(one, run());
    let other_seed = run_ld_experiment(&ExperimentConfig {
        seed: 10,
        ..ld.clone()
    })
    .unwrap();
    assert_ne!(cells(&one.0.body), cells(&other_seed.body));
}

#[test]
fn trial_count_edge_cases() {
    let cfg = ExperimentConfig::new(1, 16, 0, 1);
    assert!(matches!(run_clt_experiment(&cfg), Err(Error::Domain(_))));
    let one = run_clt_experiment(&ExperimentConfig { trials: 1, ..cfg }).unwrap();
    match one.body {
        ReportBody::Clt(s) => {
            assert!(!s.variance_defined);
            assert!(s.variance_z.is_none() && s.mean_half_width.is_none());
        }
        other => panic!("unexpected body {other:?}"),
    }
    assert!(one.checks.is_empty());
}

#[test]
fn bad_configurations_are_rejected() {
    let ld = |ys: Vec<f64>| run_ld_experiment(&ExperimentConfig::new(1, 64, 10, 1).with_y_grid(ys));
    assert!(ld(vec![]).is_err());
    assert!(ld(vec![0.5]).is_err());
    assert!(ld(vec![0.0]).is_err());
    assert!(ld(vec![0.2501]).is_err());
    assert!(run_clt_experiment(&ExperimentConfig::new(2, 15, 10, 1)).is_err());
    assert!(run_horton_check(&ExperimentConfig::new(2, 31, 10, 1)).is_err());
    assert!(run_clt_experiment(&ExperimentConfig::new(0, 64, 10, 1)).is_err());
    assert!(matches!(
        run_clt_experiment(&ExperimentConfig::new(1, (1 << 24) + 1, 10, 1)),
        Err(Error::Resource { .. })
    ));
}

#[test]
fn unreachable_tail_is_censored() {
    let cfg = ExperimentConfig::new(1, 256, 20_000, 3).with_y_grid(vec![0.45]);
    let report = run_ld_experiment(&cfg).unwrap();
    let cell = &cells(&report.body)[0];
    assert_eq!(cell.side, TailSide::Above);
    assert!(cell.censored);
    assert_eq!(cell.hits, 0);
    assert_eq!(cell.log_frequency, (3.0f64 / 20_000.0).ln());
    assert!(report.passed());
}

#[test]
fn tails_agree_with_exact_law() {
    let cfg = ExperimentConfig::new(1, 128, 200_000, 11).with_y_grid(vec![0.18, 0.22, 0.28, 0.32]);
    let report = run_ld_experiment(&cfg).unwrap();
    let law = exact_pmf(2, 128, Arithmetic::LogSpace).unwrap();
    for cell in cells(&report.body) {
        let p = law.log_tail(cell.y, cell.side).exp();
        let se = (p * (1.0 - p) / cell.trials as f64).sqrt();
        assert!(
            (cell.frequency - p).abs() <= 3.0 * se,
            "y = {}: {} vs {p}",
            cell.y,
            cell.frequency
        );
    }
    assert!(report.passed(), "{:?}", report.checks);
}

#[test]
fn empirical_rate_approaches_limit() {
    let y = 0.30;
    let limit = rate(1, y).unwrap().rate;
    let errors: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let cfg = ExperimentConfig::new(1, n, 1_000_000, 5).with_y_grid(vec![y]);
            let cell = cells(&run_ld_experiment(&cfg).unwrap().body)[0].clone();
            assert!(!cell.censored);
            (cell.empirical_rate - limit).abs()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn clt_variance_matches_exact_and_limit() {
    let report = run_clt_experiment(&ExperimentConfig::new(2, 8192, 100_000, 17)).unwrap();
    let ReportBody::Clt(s) = &report.body else {
        panic!("unexpected body");
    };
    let (v, se) = (s.variance_z.unwrap(), s.variance_z_stderr.unwrap());
    assert!((v - s.variance_exact.unwrap()).abs() <= 3.0 * se);
    let (mean, h) = (s.mean_fraction, s.mean_half_width.unwrap());
    assert!((mean - s.mean_exact.unwrap()).abs() <= h);
    // the finite-n mean sits about 1.9e-5 above 1/16, more than one half-width
    assert!((s.mean_exact.unwrap() - 1.0 / 16.0 - 1.9e-5).abs() < 1e-6);
    assert!((mean - 1.0 / 16.0).abs() <= h + 2e-5);
    // (4^r − 1)/(3·16^r) with r = 2
    assert!((s.variance_theory - 15.0 / 768.0).abs() < 1e-16);
    assert!(report.passed(), "{:?}", report.checks);
}

#[test]
fn horton_ratios_settle_at_one_quarter() {
    let report = run_horton_check(&ExperimentConfig::new(6, 1 << 16, 10_000, 23)).unwrap();
    let ReportBody::Horton { rows } = &report.body else {
        panic!("unexpected body");
    };
    assert_eq!(rows.len(), 6);
    for row in rows {
        assert!(
            row.deviation.abs() <= 0.01,
            "order {}: {}",
            row.order,
            row.mean_ratio
        );
    }
    assert!(report.passed());
}

#[test]
fn four_leaf_ratio() {
    // E[S_2 / S_1] = E[S_2] / 4 = 0.3 for four leaves
    let trials = 100_000u64;
    let total: u64 = (0..trials)
        .map(|i| branch_counts(&sample_tree(4, TreeSeed::new(31, i))).get(2))
        .sum();
    let mean = total as f64 / (4.0 * trials as f64);
    assert!((mean - 0.3).abs() < 0.003, "mean ratio {mean}");
}
