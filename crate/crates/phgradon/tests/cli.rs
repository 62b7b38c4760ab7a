use std::path::PathBuf;
use std::process::Command;

use phgradon::cli::{parse_args, run, ExperimentConfig, Experiment};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phgradon"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("phgradon-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn args(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn same_config_same_report() {
    let (cfg, _) = parse_args(&args(&["verify-radon", "--suite", "single", "--n", "3", "--gamma", "0.5", "--ell", "1"])).unwrap();
    let a = serde_json::to_string(&run(&cfg).to_json()).unwrap();
    let b = serde_json::to_string(&run(&cfg).to_json()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn report_files_are_byte_identical_across_runs_and_thread_counts() {
    let mut bodies = Vec::new();
    for threads in ["1", "3"] {
        let dir = scratch(&format!("det{threads}"));
        let st = bin()
            .env("PHGRADON_THREADS", threads)
            .args(["verify-backprojection", "--suite", "single", "--gamma", "0.25", "--out"])
            .arg(&dir)
            .output()
            .unwrap();
        assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stdout));
        bodies.push(std::fs::read(dir.join("report.json")).unwrap());
        assert!(dir.join("timing.json").exists());
        assert!(std::fs::read_dir(&dir).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().starts_with("samples_")));
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn exit_codes() {
    let code = |a: &[&str]| bin().args(a).output().unwrap().status.code();
    assert_eq!(code(&["verify-index-calculus"]), Some(0));
    assert_eq!(code(&["verify-radon", "--bogus", "1"]), Some(4));
    assert_eq!(code(&["verify-nothing"]), Some(4));
    assert_eq!(code(&["verify-radon", "--n", "5"]), Some(4));
    assert_eq!(code(&["list"]), Some(0));
    // an impossible tolerance turns a passing check into a failure
    assert_eq!(code(&["verify-radon", "--suite", "single", "--tol-coefficient", "1e-300"]), Some(2));
}

#[test]
fn config_file_then_overrides() {
    let dir = scratch("cfg");
    let path = dir.join("run.cfg");
    std::fs::write(&path, "# case b\nn = 2\ngamma = -0.5\nell = 0\nsuite = single\n").unwrap();
    let (cfg, _) = parse_args(&args(&["verify-backprojection", "--config", path.to_str().unwrap(), "--gamma", "-0.25"])).unwrap();
    assert_eq!(cfg.n, 2);
    assert_eq!(cfg.gamma.re, -0.25);
    assert_eq!(cfg.suite, "single");
    let fresh = ExperimentConfig::new(Experiment::VerifyBackprojection);
    assert_ne!(fresh.gamma, cfg.gamma);
}

#[test]
fn listing_as_json() {
    let out = bin().args(["list", "--json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v["experiments"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), 6);
    assert!(names.contains(&"verify-mellin"));
}
