use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hsw(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsw"))
        .current_dir(dir)
        .env_remove("HSW_THREADS")
        .args(args)
        .output()
        .expect("hsw runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn resonance_verify_reports_the_cubic_extremes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hsw(tmp.path(), &["resonance-verify", "--k-max", "32"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = read_json(&tmp.path().join("runs/resonance-verify/resonance.json"));
    assert_eq!(report["ratio_min"], 1.5);
    assert_eq!(report["violations"], 0);
    assert!(report["ratio_max"].as_f64().unwrap() < 3.0);
}

#[test]
fn simulate_conserves_energy_and_lists_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("smooth.json"),
        r#"{ "j": 2, "n_points": 64, "t_end": 0.2, "dt": 1e-3, "profile": "broadband:8:1:1" }"#,
    )
    .unwrap();
    let out = hsw(tmp.path(), &["simulate", "--config", "smooth.json", "--snapshots", "--record-every", "50"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = stdout_json(&out);
    assert!(summary["max_relative_energy_drift"].as_f64().unwrap() <= 1e-8);
    assert_eq!(summary["max_abs_mean"], 0.0);

    let run = tmp.path().join("runs/smooth");
    let manifest = read_json(&run.join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["record_every"], 50);
    let mut listed: Vec<String> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    listed.sort();
    let mut found = Vec::new();
    let mut stack = vec![run.clone()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                found.push(p.strip_prefix(&run).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    found.sort();
    assert_eq!(listed, found);
    assert!(found.iter().any(|f| f.starts_with("snapshots/")));
}

#[test]
fn config_errors_exit_2_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("empty.json"), "\n").unwrap();
    let out = hsw(tmp.path(), &["simulate", "--config", "empty.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("empty.json:1"), "{}", stderr(&out));

    let out = hsw(tmp.path(), &["simulate", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(tmp.path().join("typo.json"), "{\n  \"j\": 1,\n  \"dtt\": 0.1\n}\n").unwrap();
    let out = hsw(tmp.path(), &["simulate", "--config", "typo.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("typo.json:3"), "{}", stderr(&out));

    std::fs::write(tmp.path().join("bad.json"), "{\n  \"j\": 1,\n  \"n_points\": 60\n}\n").unwrap();
    let out = hsw(tmp.path(), &["simulate", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.json:3"), "{}", stderr(&out));

    let out = hsw(tmp.path(), &["simulate", "--config", "bad.json", "--n-points", "6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--n-points"), "{}", stderr(&out));

    let out = hsw(tmp.path(), &["simulate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blow_up_exits_1_and_still_writes_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hsw(
        tmp.path(),
        &["simulate", "--name", "boom", "--n-points", "16", "--dt", "0.1", "--t-end", "1", "--profile", "single_mode:1:1e200"],
    );
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let manifest = read_json(&tmp.path().join("runs/boom/manifest.json"));
    assert_eq!(manifest["status"], "failed");
    assert!(manifest["error"].as_str().unwrap().contains("step"));
}

#[test]
fn thread_cap_is_honoured_and_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_hsw"))
            .current_dir(tmp.path())
            .env("HSW_THREADS", threads)
            .args(["l4-probe", "--n-points", "16", "--n-time", "8", "--n-samples", "20", "--name", "p"])
            .output()
            .unwrap()
    };
    let out = run("1");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(read_json(&tmp.path().join("runs/p/manifest.json"))["threads"], 1);
    let first = std::fs::read(tmp.path().join("runs/p/ratios.csv")).unwrap();
    let out = run("2");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_json(&tmp.path().join("runs/p/manifest.json"))["threads"], 2);
    assert_eq!(first, std::fs::read(tmp.path().join("runs/p/ratios.csv")).unwrap());

    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn flags_override_config_values() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("g.json"), r#"{ "t_end": 2, "n_points": 32, "s_list": [0.9] }"#).unwrap();
    let out = hsw(tmp.path(), &["growth-campaign", "--config", "g.json", "--s-list", "0.7,0.95"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let run = tmp.path().join("runs/g");
    assert!(run.join("growth_s0.7.csv").exists());
    assert!(run.join("growth_s0.95.csv").exists());
    assert!(!run.join("growth_s0.9.csv").exists());

    let out = hsw(tmp.path(), &["growth-campaign", "--config", "g.json", "--s-list", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}
