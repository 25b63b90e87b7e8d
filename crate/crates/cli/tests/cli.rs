use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frontlab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = bin();
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("[model]\nmu = -1.0\n", "model.mu"),
        ("[model]\nmu = 1.0\nmu = 2.0\n", "duplicate"),
        ("[model]\nspeed = 1.0\n", "unknown field"),
        ("[model]\nh0 = \"ten\"\n", "invalid type"),
    ] {
        let cfg = write_config(tmp.path(), text);
        let o = run(&["simulate"], Some(&cfg), &tmp.path().join("out"));
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{text}: {err}");
        assert!(err.contains(needle), "{text}: {err}");
    }
    let o = run(&["simulate"], Some(&tmp.path().join("missing.toml")), &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn model_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["experiment", "warp"], None, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(tmp.path(), "[kernel]\nfamily = \"power\"\nsigma = 0.8\n");
    let o = run(&["speed"], Some(&cfg), tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn csv_headers_match_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write_config(
        d,
        "[simulation]\nt_end = 5.0\nsnap_dt = 2.5\n[cauchy]\nt_end = 2.0\nsnap_dt = 1.0\n[semiwave]\nn_cells = 1000\n",
    );
    assert_eq!(run(&["semiwave", "--c", "1.0"], Some(&cfg), &d.join("sw")).status.code(), Some(0));
    assert_eq!(header(&d.join("sw/profile.csv")), "x,phi");
    assert_eq!(run(&["speed"], Some(&cfg), &d.join("sp")).status.code(), Some(0));
    assert_eq!(header(&d.join("sp/profile.csv")), "x,phi");
    assert_eq!(run(&["speed-curve", "--mus", "1,10"], Some(&cfg), &d.join("sc")).status.code(), Some(0));
    assert_eq!(header(&d.join("sc/c0_curve.csv")), "mu,c0,residual");
    assert_eq!(fs::read_to_string(d.join("sc/c0_curve.csv")).unwrap().lines().count(), 3);
    assert_eq!(run(&["simulate"], Some(&cfg), &d.join("sim")).status.code(), Some(0));
    assert_eq!(header(&d.join("sim/trajectory.csv")), "t,g,h");
    assert_eq!(header(&d.join("sim/snapshots/000.csv")), "x,u");
    assert!(d.join("sim/snapshots/002.csv").exists());
    assert_eq!(run(&["cauchy"], Some(&cfg), &d.join("ca")).status.code(), Some(0));
    assert_eq!(header(&d.join("ca/levelset.csv")), "t,x_minus,x_plus");
    assert_eq!(header(&d.join("ca/snapshots/000.csv")), "x,u");
    let s = summary(&d.join("sim"));
    assert_eq!(s["command"], "simulate");
    assert_eq!(s["clamp_count"], 0);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("truncation.toml");
    let files = ["truncation.csv", "summary.json"];
    let mut first = Vec::new();
    for pass in 0..2 {
        let out = tmp.path().join(format!("run{pass}"));
        let threads = if pass == 0 { "1" } else { "4" };
        let o = run(&["experiment", "--threads", threads], Some(&cfg), &out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
        let contents: Vec<Vec<u8>> = files.iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
        if pass == 0 {
            first = contents;
        } else {
            assert_eq!(first, contents);
        }
    }
    let sim = write_config(tmp.path(), "[simulation]\nt_end = 10.0\nsnap_dt = 5.0\n");
    let a = run(&["simulate"], Some(&sim), &tmp.path().join("a"));
    let b = run(&["simulate"], Some(&sim), &tmp.path().join("b"));
    assert!(a.status.success() && b.status.success());
    for f in ["trajectory.csv", "snapshots/001.csv", "summary.json"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn csv_values_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["experiment", "truncation"], Some(&configs().join("truncation.toml")), tmp.path());
    assert!(o.status.success());
    let s = summary(tmp.path());
    let text = fs::read_to_string(tmp.path().join("truncation.csv")).unwrap();
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last.len(), 5);
    assert_eq!(last[0], 80.0);
    assert!(last[3] > 1.0);
    assert_eq!(s["passed"], true);
}

#[test]
fn linear_speed_experiment_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["experiment"], Some(&configs().join("linear-speed.toml")), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let s = summary(tmp.path());
    assert_eq!(s["experiment"], "linear-speed");
    assert!(s["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn dichotomy_experiment_reports_tags() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["experiment"], Some(&configs().join("dichotomy-vanishing.toml")), &tmp.path().join("v"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(summary(&tmp.path().join("v"))["outcome"]["tag"], "Vanishing");

    // the spreading set checked against the wrong expectation fails the check
    let text = fs::read_to_string(configs().join("dichotomy-spreading.toml")).unwrap().replace("\"spreading\"", "\"vanishing\"");
    let cfg = write_config(tmp.path(), &text);
    let o = run(&["experiment"], Some(&cfg), &tmp.path().join("s"));
    assert_eq!(o.status.code(), Some(1));
    let s = summary(&tmp.path().join("s"));
    assert_eq!(s["passed"], false);
    assert_eq!(s["outcome"]["tag"], "Spreading");
}

#[test]
fn nonexistent_semiwave_is_a_failed_check() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["semiwave", "--c", "3.0"], None, tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(summary(tmp.path())["accepted"], false);
    assert!(!tmp.path().join("profile.csv").exists());
}

#[test]
fn classify_kernel_reports_class() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[kernel]\nfamily = \"power\"\nsigma = 3.0\n");
    let o = run(&["classify-kernel"], Some(&cfg), tmp.path());
    assert!(o.status.success());
    let s = summary(tmp.path());
    assert_eq!(s["stored_class"], "heavy-tail-j1-only");
    assert_eq!(s["agree"], true);

    // the first moment of power(2) converges too slowly for the probe depths
    let cfg = write_config(tmp.path(), "[kernel]\nfamily = \"power\"\nsigma = 2.0\n");
    let o = run(&["classify-kernel"], Some(&cfg), tmp.path());
    assert!(o.status.success());
    let s = summary(tmp.path());
    assert!(s["probed_class"].is_null());
    assert!(s["probe_error"].as_str().unwrap().contains("could not be decided"));
}
