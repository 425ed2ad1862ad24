use spiked_detect::harness::{
    export, normality_summary, read_curves, run_experiment, CurveRow, ExperimentConfig, ExportPaths, Hypothesis,
    TestKind,
};
use spiked_detect::Prior;

fn config(grid: Vec<f64>, tests: Vec<TestKind>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(8, grid, 6, 512, Prior::Rademacher, 21);
    c.tests = tests;
    c
}

#[test]
fn curves_round_trip_bit_exactly() {
    let report = run_experiment(&config(vec![0.1, 0.35], vec![TestKind::LrMc, TestKind::Lss, TestKind::Pca])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = ExportPaths::in_dir(dir.path().join("nested"));
    export(&report, &paths).unwrap();
    let rows = read_curves(&paths.curves).unwrap();
    let expected: Vec<CurveRow> = report.curves.iter().map(CurveRow::from).collect();
    assert_eq!(rows.len(), 6);
    for (a, b) in rows.iter().zip(&expected) {
        assert_eq!(a.omega.to_bits(), b.omega.to_bits());
        assert_eq!(a.err_empirical.to_bits(), b.err_empirical.to_bits());
        assert_eq!(a.err_se.to_bits(), b.err_se.to_bits());
        assert_eq!(a.err_theory.map(f64::to_bits), b.err_theory.map(f64::to_bits));
        assert_eq!((a.test, a.n_indeterminate), (b.test, b.n_indeterminate));
    }
    let header = std::fs::read_to_string(&paths.curves).unwrap();
    assert!(header.starts_with("omega,test,err_empirical,err_se,err_theory,n_indeterminate\n"));
    let samples = std::fs::read_to_string(&paths.loglr_samples).unwrap();
    let mut lines = samples.lines();
    assert_eq!(lines.next(), Some("omega,hypothesis,replicate,loglr"));
    assert_eq!(lines.count(), 2 * 2 * 6);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&paths.report).unwrap()).unwrap();
    assert_eq!(json["config"]["N"], 8);
}

#[test]
fn empty_grid_writes_headers_only() {
    let report = run_experiment(&config(Vec::new(), vec![TestKind::LrMc])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = ExportPaths::in_dir(dir.path());
    export(&report, &paths).unwrap();
    assert_eq!(std::fs::read_to_string(&paths.curves).unwrap().lines().count(), 1);
    assert_eq!(std::fs::read_to_string(&paths.loglr_samples).unwrap().lines().count(), 1);
}

#[test]
fn one_omega_two_tests_gives_two_rows() {
    let report = run_experiment(&config(vec![0.2], vec![TestKind::LrExact, TestKind::Lss])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = ExportPaths::in_dir(dir.path());
    export(&report, &paths).unwrap();
    assert_eq!(read_curves(&paths.curves).unwrap().len(), 2);
}

#[test]
fn export_reports_unwritable_path() {
    let report = run_experiment(&config(vec![0.2], vec![TestKind::Lss])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = export(&report, &ExportPaths::in_dir(blocker.join("sub"))).unwrap_err();
    assert!(err.to_string().contains("file"), "{err}");
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let mut c = config(vec![0.15, 0.3], vec![TestKind::LrMc, TestKind::Pca]);
    c.prior = Prior::Spherical;
    c.n_mc = 5000;
    let runs: Vec<String> = [1, 3]
        .into_iter()
        .map(|w| {
            c.workers = Some(w);
            run_experiment(&c).unwrap().deterministic_json().unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn seeds_change_results() {
    let a = run_experiment(&config(vec![0.3], vec![TestKind::LrMc])).unwrap();
    let mut c = config(vec![0.3], vec![TestKind::LrMc]);
    c.master_seed += 1;
    let b = run_experiment(&c).unwrap();
    assert_ne!(
        a.statistics(0.3, TestKind::LrMc, Hypothesis::H0),
        b.statistics(0.3, TestKind::LrMc, Hypothesis::H0)
    );
}

#[test]
fn omega_zero_summary_is_degenerate() {
    let mut c = config(vec![0.0], vec![TestKind::LrExact]);
    c.replicates = 30;
    let report = run_experiment(&c).unwrap();
    let s = normality_summary(&report, 0.0).unwrap();
    assert!(s.degenerate);
    assert_eq!((s.mean_h0, s.var_h0, s.mean_h1), (0.0, 0.0, 0.0));
    assert!(s.ks_h0.is_none());
}

#[test]
fn lr_error_curve_is_non_increasing() {
    let grid = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let report = run_experiment(&ExperimentConfig::new(32, grid, 200, 10_000, Prior::Rademacher, 5)).unwrap();
    for pair in report.curves.windows(2) {
        let pooled = pair[0].err_se.hypot(pair[1].err_se);
        assert!(
            pair[1].err_empirical <= pair[0].err_empirical + 3.0 * pooled,
            "{} -> {}",
            pair[0].err_empirical,
            pair[1].err_empirical
        );
    }
}
