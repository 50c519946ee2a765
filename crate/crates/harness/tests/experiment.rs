mod common;

use bsum_harness::curves::parse_curves;
use bsum_harness::{run_experiment, ExperimentConfig, RunSummary};
use common::{failing_config, small_config};

fn config(v: serde_json::Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&v.to_string()).unwrap()
}

#[test]
fn one_curve_and_summary_per_method_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(small_config());
    let report = run_experiment(&cfg, dir.path(), 1).unwrap();
    assert!(!report.failed());
    assert_eq!(report.runs.len(), 6);
    let mut files: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files.len(), 12);
    for method in ["adagrad", "bp-clr", "bsum-inverse-root"] {
        for seed in [4, 5] {
            let stem = format!("{method}__seed{seed}");
            let rows = parse_curves(&dir.path().join(format!("{stem}.csv"))).unwrap();
            assert!(rows.iter().all(|r| r.method == method && r.seed == seed));
            assert_eq!(rows[0].k, 0);
            let s: RunSummary =
                serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{stem}.json"))).unwrap())
                    .unwrap();
            assert_eq!(s.status, "ok");
            assert_eq!(s.curve_file, format!("{stem}.csv"));
            assert_eq!(s.final_f, Some(rows.last().unwrap().f));
            assert_eq!(s.wall_seconds, None);
        }
    }
}

#[test]
fn methods_share_the_initial_point_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&config(small_config()), dir.path(), 1).unwrap();
    for seed in [4, 5] {
        let f0: Vec<f64> = report
            .runs
            .iter()
            .filter(|r| r.seed == seed)
            .map(|r| r.initial_f.unwrap())
            .collect();
        assert!(f0.windows(2).all(|w| w[0] == w[1]), "{f0:?}");
    }
    let a = report.runs.iter().find(|r| r.seed == 4).unwrap().initial_f;
    let b = report.runs.iter().find(|r| r.seed == 5).unwrap().initial_f;
    assert_ne!(a, b);
}

#[test]
fn reruns_are_byte_identical_for_any_thread_count() {
    let cfg = config(small_config());
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg, a.path(), 1).unwrap();
    run_experiment(&cfg, b.path(), 4).unwrap();
    let mut n = 0;
    for e in std::fs::read_dir(a.path()).unwrap() {
        let name = e.unwrap().file_name();
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
        n += 1;
    }
    assert_eq!(n, 12);
}

#[test]
fn timing_is_recorded_only_on_request() {
    let mut v = small_config();
    v["record_timing"] = serde_json::json!(true);
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&config(v), dir.path(), 2).unwrap();
    assert!(report.runs.iter().all(|r| r.wall_seconds.is_some()));
    let rows = parse_curves(&report.curve_files[0]).unwrap();
    assert!(rows.last().unwrap().wall_seconds > 0.0);
}

#[test]
fn failed_runs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&config(failing_config()), dir.path(), 1).unwrap();
    assert!(report.failed());
    assert!(report.runs.iter().all(|r| r.status == "failed" && r.error.is_some()));
    assert!(report.curve_files.iter().all(|p| p.exists()));
}

#[test]
fn minibatch_runs_use_the_stochastic_trainer() {
    let mut v = small_config();
    v["proposed"][0]["sampler"] = serde_json::json!({ "fixed_size": 10 });
    v["proposed"][0]["sampler_seed"] = serde_json::json!(3);
    v["baselines"] = serde_json::json!([]);
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&config(v), dir.path(), 1).unwrap();
    assert!(!report.failed());
    assert_eq!(report.runs.len(), 2);
    assert_eq!(report.runs[0].iterations, 60);
}
