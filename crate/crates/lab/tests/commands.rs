use serde_json::Value;
use yamabe_core::Sequential;
use yamabe_lab::{parse_config, run_command, LabError, Rayon, Verb};

const SMALL: &str = r#"
[solver]
dx = 0.05
dt = 0.01
record_every = 10
margin = 30.0

[experiment]
starts = [12.0, 14.0]
ks = [0.2, 0.1]
h_primes = [0.0, 5.0]
"#;

fn report(dir: &std::path::Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn ancient_reports_every_invariant() {
    let cfg = parse_config(SMALL).unwrap();
    let t = tempfile::tempdir().unwrap();
    let out = run_command(Verb::Ancient, &cfg, t.path(), &Rayon).unwrap();
    let names: Vec<&str> = out.checks.iter().map(|c| c.name.as_str()).collect();
    for want in [
        "sandwich margin",
        "pointwise increase in tau",
        "Cauchy gaps strictly decreasing",
        "max-value rate",
        "argmax offset",
    ] {
        assert!(names.contains(&want), "{names:?}");
    }
    let r = report(&out.dir);
    assert_eq!(r["details"]["cauchy_gaps"].as_array().unwrap().len(), 1);
    assert!(out.files.contains(&"limit.csv".to_string()));
}

#[test]
fn scan_classifies_default_speeds() {
    let cfg = parse_config(SMALL).unwrap();
    let t = tempfile::tempdir().unwrap();
    let out = run_command(Verb::Scan, &cfg, t.path(), &Sequential).unwrap();
    let r = report(&out.dir);
    let table = r["details"]["speeds"].as_array().unwrap();
    let got: Vec<&str> = table.iter().map(|s| s["limit"].as_str().unwrap()).collect();
    assert_eq!(got, ["zero", "wave_right", "one", "wave_left", "zero"]);
}

#[test]
fn limits_writes_both_sweeps() {
    let cfg = parse_config(SMALL).unwrap();
    let t = tempfile::tempdir().unwrap();
    let out = run_command(Verb::Limits, &cfg, t.path(), &Rayon).unwrap();
    assert!(out.files.contains(&"k_sweep.csv".to_string()));
    assert!(out.files.contains(&"h_prime_sweep.csv".to_string()));
    let header = std::fs::read_to_string(out.dir.join("k_sweep.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), "x,v_0,v_1,target");
}

#[test]
fn failed_checks_leave_artifacts() {
    // Roundoff alone exceeds a zero-width residual tolerance.
    let cfg = parse_config("[barrier]\ntol = 1e-300\n").unwrap();
    let t = tempfile::tempdir().unwrap();
    match run_command(Verb::Barrier, &cfg, t.path(), &Sequential) {
        Err(LabError::ChecksFailed { verb, failed }) => {
            assert_eq!(verb, "barrier");
            assert_eq!(failed, ["subsolution residual"]);
        }
        other => panic!("{other:?}"),
    }
    assert!(t.path().join("barrier/manifest.json").is_file());
    assert!(t.path().join("barrier/crossings.csv").is_file());
    assert_eq!(report(&t.path().join("barrier"))["all_passed"], false);
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let mut cfg = parse_config("").unwrap();
    cfg.experiment.cutoff = 0.0;
    let t = tempfile::tempdir().unwrap();
    let e = run_command(Verb::Scan, &cfg, t.path(), &Sequential).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(!t.path().join("scan").exists());
}
