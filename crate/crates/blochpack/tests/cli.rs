use std::path::Path;
use std::process::{Command, Output};

use blochpack::cli::{self, Command as Sub};
use blochpack::config::RunConfig;

fn blochpack(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blochpack"))
        .args(args)
        .current_dir(dir)
        .env_remove("BLOCHPACK_THREADS")
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap()).collect()
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"grid": {"L": "wide"}}"#).unwrap();
    let out = blochpack(&["grid", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.L"));

    std::fs::write(&cfg, "{ not json").unwrap();
    let out = blochpack(&["grid", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_config_runs_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    std::fs::write(&cfg, "").unwrap();
    let out = blochpack(&["grid", "--config", cfg.to_str().unwrap(), "--out", "o", "--threads", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("o/grid.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "grid");
    assert_eq!(manifest["threads"], 1);
    assert_eq!(manifest["seed"], RunConfig::default().seed);
    assert_eq!(manifest["config"]["grid"]["L"], 2.0);
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_blochpack"))
        .args(["grid", "--out", "o"])
        .current_dir(dir.path())
        .env("BLOCHPACK_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("o/grid.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 2);
}

#[test]
fn injected_symbol_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.output.dir = dir.path().to_path_buf();
    cfg.verify.inject_bad_symbol = true;
    assert!(!cli::execute(Sub::Verify, &cfg, 1).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|n| n.contains("injected")), "{failed:?}");
}

#[test]
fn zeropack_small_run_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("z.json");
    std::fs::write(
        &cfg_path,
        r#"{"Lambda_list": [4.0], "degrees": [0, 1], "packing": {"restarts": 2}, "output": {"dir": "first"}}"#,
    )
    .unwrap();
    let out = blochpack(&["zeropack", "--config", "z.json", "--threads", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let rows = csv_rows(&dir.path().join("first/zeropack.csv"));
    let sentinel = rows.iter().find(|r| &r[6] == "sentinel").unwrap();
    assert!((sentinel[3].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    let d0 = rows.iter().find(|r| &r[6] != "sentinel" && &r[2] == "0").unwrap();
    let d1 = rows.iter().find(|r| &r[2] == "1").unwrap();
    // radial oracle for constants: minimize 1 + (c^2 (1 - a^2)/2 - 2 c (1 - a))/Lambda
    let a = (-4.0f64).exp();
    let best = 1.0 - 2.0 * (1.0 - a) * (1.0 - a) / ((1.0 - a * a) * 4.0);
    let r0: f64 = d0[3].parse().unwrap();
    assert!((r0 - best).abs() < 1e-6, "{r0} vs {best}");
    assert!(d1[3].parse::<f64>().unwrap() <= r0);

    // the manifest carries everything needed to reproduce the run
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("first/zeropack.manifest.json")).unwrap()).unwrap();
    let mut replay: RunConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    replay.output.dir = dir.path().join("second");
    assert!(cli::execute(Sub::Zeropack, &replay, 1).unwrap());
    assert_eq!(
        std::fs::read(dir.path().join("first/zeropack.csv")).unwrap(),
        std::fs::read(dir.path().join("second/zeropack.csv")).unwrap()
    );
}

#[test]
fn project_harmonic_derivative_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("p.json");
    std::fs::write(
        &cfg_path,
        r#"{"symbols": [{"name": "h1", "symbol": {"kind": "angular-harmonic", "m": 1}}],
            "project": {"n_r": 2, "n_theta": 4, "max_radius": 0.5}}"#,
    )
    .unwrap();
    let out = blochpack(&["project", "--config", "p.json", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("o/project.csv"));
    let origin = rows.iter().find(|r| r[1].parse::<f64>().unwrap() == 0.0 && r[2].parse::<f64>().unwrap() == 0.0).unwrap();
    let re_dp: f64 = origin[5].parse().unwrap();
    let im_dp: f64 = origin[6].parse().unwrap();
    assert!((re_dp - 4.0 / 3.0).abs() < 1e-8 && im_dp.abs() < 1e-8, "{re_dp} {im_dp}");
}

#[test]
fn ims_mean_is_one_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.output.dir = dir.path().to_path_buf();
    cfg.symbols = serde_json::from_str(r#"[{"name": "one", "symbol": {"kind": "constant", "c": 1.0}}]"#).unwrap();
    cfg.t_list = vec![0.0, 0.05];
    cfg.r_list = vec![0.5, 0.9];
    assert!(cli::execute(Sub::Ims, &cfg, 1).unwrap());
    let rows = csv_rows(&dir.path().join("ims.csv"));
    let at_zero: Vec<_> = rows.iter().filter(|r| r[1].parse::<f64>().unwrap() == 0.0).collect();
    assert_eq!(at_zero.len(), 2);
    for r in at_zero {
        assert!((r[4].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    }
}
