use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn toa(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toa"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .env_remove("TOA_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn error_json(o: &Output) -> Value {
    serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap()
}

#[test]
fn walk_validate_reports_exact_conservation() {
    let dir = tempfile::tempdir().unwrap();
    let o = toa(&["run", "walk-validate", "--d", "3", "--n-max", "50", "--trials", "20000"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["result"]["conservation_all_exact"], true);
    assert_eq!(s["result"]["dual_form_agrees"], true);
    assert_eq!(s["result"]["monte_carlo"]["failed_bins"], 0);
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["parameters"]["d"], 3);
    assert_eq!(m["parameters"]["n-max"], 50);
    assert_eq!(m["seed"], 1);
    let csv = fs::read_to_string(dir.path().join("first_arrival.csv")).unwrap();
    assert_eq!(csv.lines().count(), 52);
}

#[test]
fn kijowski_wave_norm_is_a_quarter() {
    let dir = tempfile::tempdir().unwrap();
    let o = toa(&["run", "kijowski-wave"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = json(&dir.path().join("summary.json"));
    let norm = s["result"]["norm"].as_f64().unwrap();
    assert!((norm - 0.25).abs() < 1e-4, "{norm}");
    // every default is spelled out
    let m = json(&dir.path().join("manifest.json"));
    for key in ["m", "sigma-p", "tau-max", "points"] {
        assert!(m["parameters"].get(key).is_some(), "{key}");
    }
    assert!(m["library_version"].is_string());
}

#[test]
fn slit_sweep_ratio_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "slit-sweep", "--W", "10,1,0.1,0.01", "--v0", "0.01", "--sigma-x", "100", "--m", "1", "--d", "100"];
    let o = toa(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "ratio").unwrap();
    let ratio: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(ratio.len(), 4);
    assert!(ratio.windows(2).all(|p| p[1] > p[0]), "{ratio:?}");
    assert_eq!(json(&dir.path().join("summary.json"))["result"]["ratio_monotone"], true);
}

#[test]
fn identical_runs_are_byte_identical() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = |t: &'static str| ["run", "walk-validate", "--d", "2", "--n-max", "40", "--trials", "50000", "--seed", "9", "--threads", t];
    assert!(toa(&args("1"), a.path()).status.success());
    assert!(toa(&args("4"), b.path()).status.success());
    assert!(toa(&args("4"), c.path()).status.success());
    for f in ["first_arrival.csv", "monte_carlo.csv"] {
        let x = fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{f}");
        assert_eq!(x, fs::read(c.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_only_moves_monte_carlo_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let base = ["run", "walk-validate", "--d", "2", "--n-max", "30", "--trials", "20000"];
    assert!(toa(&[&base[..], &["--seed", "1"]].concat(), a.path()).status.success());
    assert!(toa(&[&base[..], &["--seed", "2"]].concat(), b.path()).status.success());
    let read = |d: &Path, f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "first_arrival.csv"), read(b.path(), "first_arrival.csv"));
    assert_ne!(read(a.path(), "monte_carlo.csv"), read(b.path(), "monte_carlo.csv"));

    let (c, d) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(toa(&["run", "continuum", "--refinements", "1,2", "--seed", "5"], c.path()).status.success());
    assert!(toa(&["run", "continuum", "--refinements", "1,2", "--seed", "77"], d.path()).status.success());
    assert_eq!(read(c.path(), "levels.csv"), read(d.path(), "levels.csv"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wave.cfg");
    fs::write(&cfg, "# wave case\nm = 2\nsigma_p = 0.5\npoints = 11\n").unwrap();
    let out = dir.path().join("out");
    let o = toa(&["run", "kijowski-wave", "--config", cfg.to_str().unwrap(), "--points", "21"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["parameters"]["m"], 2.0);
    assert_eq!(m["parameters"]["sigma-p"], 0.5);
    assert_eq!(m["parameters"]["points"], 21);
    assert_eq!(fs::read_to_string(out.join("curves.csv")).unwrap().lines().count(), 22);
}

#[test]
fn configuration_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "no-such-experiment"][..],
        &["run", "ms-evolve"],
        &["run", "kijowski-wave", "--m", "heavy"],
        &["run", "kijowski-wave", "--m", "-1"],
        &["run", "kijowski-wave", "--bogus", "1"],
        &["validate", "--profile", "sloppy"],
    ] {
        let o = toa(args, dir.path());
        assert_eq!(o.status.code(), Some(3), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let e = error_json(&o);
        assert_eq!(e["error"], "configuration");
        assert_eq!(e["exit_code"], 3);
        assert!(e["message"].as_str().unwrap().len() > 3);
    }
    // nothing was written for a refused run
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn numerical_refusals_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    // a clock-time grid far too short for the packet
    let o = toa(&["run", "tqm-detect", "--window-sigmas", "2"], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(error_json(&o)["error"], "non_convergence");
}

#[test]
fn failed_acceptance_exits_with_two_and_keeps_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = toa(&["run", "laplace-check", "--s", "1", "--tol-laplace", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(error_json(&o)["error"], "validation_failure");
    assert_eq!(json(&dir.path().join("summary.json"))["passed"], false);
    assert_eq!(json(&dir.path().join("manifest.json"))["tolerances"]["laplace"], 0.0);

    let ok = tempfile::tempdir().unwrap();
    let o = toa(&["run", "laplace-check", "--s", "0.5,2"], ok.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&ok.path().join("manifest.json"))["tolerances"]["laplace"], 1e-3);
}

#[test]
fn absorbing_boundary_run_needs_and_echoes_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let o = toa(&["run", "ms-evolve", "--lambda", "1", "--steps", "400"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("summary.json"));
    assert!(s["result"]["bookkeeping_residual"].as_f64().unwrap() < 1e-12);
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["parameters"]["lambda"], 1.0);
    assert_eq!(m["parameters"]["epsilon"], 0.005);
}

#[test]
fn output_dir_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_toa"))
        .args(["run", "kijowski-wave", "--points", "11"])
        .env("TOA_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("curves.csv").exists());
}
