use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
[solver]
dx = 0.05
dt = 0.01
record_every = 10

[experiment]
starts = [12.0, 14.0]
ks = [0.2, 0.1]
h_primes = [0.0, 5.0]
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_yamabe-lab"));
    c.env_remove(yamabe_lab::OUT_ENV);
    c
}

fn run(dir: &Path, verb: &str, config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    bin()
        .arg(verb)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("error JSON on stderr")
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn schema_error_exits_2_with_field_path() {
    let t = tempfile::tempdir().unwrap();
    let out = run(t.path(), "wave", "[wave]\ndx = \"fine\"\n");
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "schema");
    assert_eq!(e["path"], "wave.dx");
}

#[test]
fn precondition_errors_exit_2_with_rule() {
    let t = tempfile::tempdir().unwrap();
    let out = run(t.path(), "wave", "n = 2\n");
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["path"], "n");
    assert_eq!(e["rule"], "n >= 3");

    let out = run(t.path(), "barrier", "[barrier]\nlambda = 1.0\n");
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["path"], "barrier.lambda");
    assert_eq!(e["value"], 1.0);
    assert!(
        !t.path().join("out").exists(),
        "nothing written before validation"
    );
}

#[test]
fn unreadable_config_exits_1() {
    let out = bin()
        .args(["wave", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "io");
}

#[test]
fn numerical_failure_exits_3() {
    // The domain is too narrow for the co-moving windows of the fast speeds.
    let t = tempfile::tempdir().unwrap();
    let out = run(t.path(), "scan", SMALL);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["exit_code"], 3);
}

#[test]
fn wave_outputs_are_byte_identical() {
    let cfg = "[wave]\nlambdas = [1.5, 2.0, 3.0]\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(a.path(), "wave", cfg).status.success());
    assert!(run(b.path(), "wave", cfg).status.success());
    let ta = read_tree(&a.path().join("out"));
    let tb = read_tree(&b.path().join("out"));
    let names: Vec<&str> = ta.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names.iter().filter(|n| n.ends_with(".csv")).count(), 3);
    assert!(names.contains(&"wave/manifest.json"));
    assert_eq!(ta, tb);

    let manifest: Value =
        serde_json::from_slice(&fs::read(a.path().join("out/wave/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["verb"], "wave");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let line = fs::read_to_string(a.path().join("out/wave/profile_lambda_2.csv")).unwrap();
    let row = line.lines().nth(1).unwrap();
    assert!(row.split(',').all(|c| c.contains('e')), "{row}");
}

#[test]
fn evolve_outputs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(a.path(), "evolve", SMALL).status.success());
    assert!(run(b.path(), "evolve", SMALL).status.success());
    assert_eq!(
        read_tree(&a.path().join("out")),
        read_tree(&b.path().join("out"))
    );
}

#[test]
fn environment_overrides_config_dir() {
    let t = tempfile::tempdir().unwrap();
    let env_root = t.path().join("from_env");
    let cfg = t.path().join("run.toml");
    fs::write(&cfg, "[output]\ndir = \"ignored\"\n").unwrap();
    let out = bin()
        .arg("wave")
        .arg("--config")
        .arg(&cfg)
        .env(yamabe_lab::OUT_ENV, &env_root)
        .current_dir(t.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(env_root.join("wave/manifest.json").is_file());
    assert!(!t.path().join("ignored").exists());
}

#[test]
fn report_aggregates_finished_verbs() {
    let t = tempfile::tempdir().unwrap();
    assert!(run(t.path(), "wave", "").status.success());
    assert!(run(t.path(), "barrier", "").status.success());
    let out = run(t.path(), "report", "");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let agg: Value =
        serde_json::from_slice(&fs::read(t.path().join("out/report/report.json")).unwrap())
            .unwrap();
    let reports = agg["details"]["reports"].as_object().unwrap();
    let keys: Vec<&String> = reports.keys().collect();
    assert_eq!(keys, ["barrier", "wave"]);
    assert_eq!(agg["all_passed"], true);
}

#[test]
fn report_on_empty_directory_fails_checks() {
    let t = tempfile::tempdir().unwrap();
    fs::create_dir_all(t.path().join("out")).unwrap();
    let out = run(t.path(), "report", "");
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "checks_failed");
}
