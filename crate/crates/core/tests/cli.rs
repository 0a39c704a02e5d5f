mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{textured_image, Texture};
use terrasample::experiment::ExperimentConfig;

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_terrasample"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn write_image(dir: &Path) {
    textured_image(128, 96, 2, |x, _| if x < 64 { Texture::Flat } else { Texture::Checker })
        .write(&dir.join("img.ppm"))
        .unwrap();
}

#[test]
fn stochastic_subcommands_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["segment", "--image", "img.ppm"][..],
        &["train-planner", "--scoremap", "s.csv"],
        &["train-local"],
        &["run-pipeline", "--config", "c.json"],
        &["compare-baselines", "--scoremap", "s.csv", "--policy", "p.json"],
    ] {
        let out = run(args, dir.path());
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"), "{args:?}");
    }
}

#[test]
fn stage_chain_produces_reparseable_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_image(d);
    let ok = |args: &[&str]| {
        let out = run(args, d);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    ok(&["segment", "--image", "img.ppm", "--seed", "4", "--k", "2", "--out", "seg"]);
    ok(&["render-scoremap", "--classmap", "seg/classmap.pgm", "--out", "seg/scoremap.csv"]);
    ok(&[
        "train-planner", "--scoremap", "seg/scoremap.csv", "--seed", "1", "--iterations", "10", "--m", "4",
        "--horizon", "12", "--out", "plan",
    ]);
    ok(&["plan", "--policy", "plan/policy.json", "--scoremap", "seg/scoremap.csv", "--horizon", "12", "--out", "wp.csv"]);
    ok(&[
        "compare-baselines", "--scoremap", "seg/scoremap.csv", "--policy", "plan/policy.json", "--seed", "3",
        "--horizon", "12", "--trials", "4", "--out", "cmp.csv",
    ]);
    let cmp = std::fs::read_to_string(d.join("cmp.csv")).unwrap();
    assert_eq!(cmp.lines().count(), 1 + 3 * 4 + 3);
    ok(&["train-local", "--seed", "0", "--rounds", "1", "--episodes-per-round", "4", "--epochs", "2", "--out", "local"]);
    ok(&["navigate", "--net", "local/net.json", "--classmap", "seg/classmap.pgm", "--waypoints", "wp.csv", "--out", "nav"]);
    for f in ["nav/trajectory.csv", "nav/feedback.csv", "local/rounds.csv", "local/dataset.csv", "plan/curve.csv"] {
        assert!(d.join(f).exists(), "{f}");
    }

    let first = std::fs::read(d.join("seg/classmap.pgm")).unwrap();
    ok(&["segment", "--image", "img.ppm", "--seed", "4", "--k", "2", "--out", "seg2"]);
    assert_eq!(first, std::fs::read(d.join("seg2/classmap.pgm")).unwrap());
}

#[test]
fn pipeline_failure_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = ExperimentConfig {
        image: d.join("missing.ppm"),
        output_dir: d.join("out"),
        ..ExperimentConfig::default()
    };
    std::fs::write(d.join("exp.json"), cfg.to_json().unwrap()).unwrap();
    let out = run(&["run-pipeline", "--config", "exp.json", "--seed", "1"], d);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage config"), "{err}");

    // a corrupt image fails in segmentation and keeps the output directory
    std::fs::write(d.join("bad.ppm"), "P6\n4 4\n255\n").unwrap();
    let cfg = ExperimentConfig {
        image: d.join("bad.ppm"),
        ..cfg
    };
    std::fs::write(d.join("exp.json"), cfg.to_json().unwrap()).unwrap();
    let out = run(&["run-pipeline", "--config", "exp.json", "--seed", "1"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage segment"));
    assert!(d.join("out").exists());
}

#[test]
fn zero_loop_pipeline_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_image(d);
    let cfg = ExperimentConfig {
        image: d.join("img.ppm"),
        output_dir: d.join("out"),
        loop_count: 5,
        ..ExperimentConfig::default()
    };
    std::fs::write(d.join("exp.json"), cfg.to_json().unwrap()).unwrap();
    let out = run(&["run-pipeline", "--config", "exp.json", "--seed", "9", "--loop-count", "0"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_dir(d.join("out")).unwrap().count(), 5);
}
