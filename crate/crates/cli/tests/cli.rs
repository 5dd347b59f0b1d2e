use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> PathBuf {
    repo().join("configs").join(name)
}

fn timebin(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timebin"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("TIMEBIN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = timebin(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const IDEAL: &str = r#"
[experiment]
visibility = 1.0
integration_time = 0.05
det_efficiency = { alice = 1.0, bob = 1.0 }
interferometer_transmission = { alice = 1.0, bob = 1.0 }
"#;

#[test]
fn simulate_is_reproducible_and_documented() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "short.toml", "integration_time = 1e-3\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = ["--config", cfg.to_str().unwrap(), "--seed", "1", "simulate"];
    let stdout = ok(&a, &args);
    ok(&b, &args);
    assert!(stdout.contains("trigger=76000"), "{stdout}");
    let (sa, sb) = (std::fs::read(a.join("stream.bin")).unwrap(), std::fs::read(b.join("stream.bin")).unwrap());
    assert_eq!(sa, sb);
    let m = read_json(&a.join("stream.bin.manifest.json"));
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 1);
    assert!(m["timestamp"].as_str().unwrap().ends_with('Z'));
}

#[test]
fn zero_integration_time_warns_and_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "zero.toml", "integration_time = 0.0\n");
    let o = timebin(tmp.path(), &["--config", cfg.to_str().unwrap(), "simulate", "--stream-format", "csv"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(std::fs::read_to_string(tmp.path().join("stream.csv")).unwrap(), "channel,timestamp_ps\n");
}

#[test]
fn bad_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, field) in [("visibility = 1.5\n", "visibility"), ("[experiment]\nviz = 1\n", "viz")] {
        let cfg = write(tmp.path(), "bad.toml", text);
        let o = timebin(tmp.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(field), "{err}");
    }
}

#[test]
fn checked_in_defaults_match_built_in_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&a, &["fringe"]);
    ok(&b, &["--config", config("default.toml").to_str().unwrap(), "fringe"]);
    assert_eq!(std::fs::read(a.join("fringe.json")).unwrap(), std::fs::read(b.join("fringe.json")).unwrap());
    let fit = &read_json(&a.join("fringe.json"))["fit"];
    assert!((fit["visibility"].as_f64().unwrap() - 0.91).abs() < 1e-6);
}

#[test]
fn ideal_streams_reconstruct_phi_plus_idempotently() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "ideal.toml", IDEAL);
    let streams = tmp.path().join("streams");
    ok(&streams, &["--config", cfg.to_str().unwrap(), "simulate", "--all-settings"]);
    let s = |t: &str| streams.join(format!("stream_{t}.bin")).to_str().unwrap().to_string();
    let inputs = [s("pp"), s("pl"), s("lp"), s("ll")];
    let run = |out: &Path| {
        ok(out, &[
            "--config", cfg.to_str().unwrap(), "--mc-samples", "100",
            "tomo", "--pp", &inputs[0], "--pl", &inputs[1], "--lp", &inputs[2], "--ll", &inputs[3],
        ])
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&a);
    run(&b);
    for f in ["tomo.json", "records.json", "rho_bars.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
        assert!(a.join(format!("{f}.manifest.json")).exists());
    }
    let r = read_json(&a.join("tomo.json"));
    let f = r["metrics"]["fidelity_phi_plus"].as_f64().unwrap();
    assert!(f > 0.99, "fidelity {f}");
    assert_eq!(r["mc_samples"], 100);
    assert!(r["metrics"]["concurrence_lower"].is_number());
    let m = read_json(&a.join("tomo.json.manifest.json"));
    assert_eq!(m["parameters"]["mc_samples"], 100);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 4);
    let bars = std::fs::read_to_string(a.join("rho_bars.csv")).unwrap();
    assert_eq!(bars.lines().count(), 17);

    // the metrics command accepts a tomography result directly
    let out = ok(&tmp.path().join("m"), &["metrics", a.join("tomo.json").to_str().unwrap()]);
    assert!(out.contains("concurrence"));

    // histogram CSVs are accepted in place of streams
    let h = tmp.path().join("h");
    ok(&h, &["--config", cfg.to_str().unwrap(), "histogram", &inputs[0]]);
    let cells = read_json(&h.join("cells.json"));
    assert_eq!(cells["cells"]["cells"][1][1], r_center(&a));
}

fn r_center(tomo_dir: &Path) -> Value {
    let records = read_json(&tomo_dir.join("records.json"));
    records
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["setting"] == "++" && r["source"]["cell"] == serde_json::json!([0, 0]))
        .unwrap()["count"]
        .clone()
}

#[test]
fn tomo_requires_all_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let o = timebin(tmp.path(), &["tomo", "--pp", "a.bin", "--pl", "b.bin", "--lp", "c.bin"]);
    assert!(!o.status.success());
    let o = timebin(tmp.path(), &["tomo", "--pp", "a", "--pl", "b", "--lp", "c", "--ll", "missing.bin"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("a"));
}

#[test]
fn metrics_of_reference_and_textbook_matrices() {
    let tmp = tempfile::tempdir().unwrap();
    let reference = repo().join("crates/core/data/reference_rho.json");
    let out = tmp.path().join("out");
    ok(&out, &["--printed-decimals", "4", "metrics", reference.to_str().unwrap()]);
    let m = read_json(&out.join("metrics.json"));
    assert!((m["concurrence"].as_f64().unwrap() - 0.96).abs() < 0.02);
    assert!((m["fidelity_phi_plus"].as_f64().unwrap() - 0.958).abs() < 0.001);
    assert!((m["chsh_s"].as_f64().unwrap() - 2.70).abs() < 0.05);

    // without the rounding allowance the printed trace of 0.9999 is rejected
    let o = timebin(&out, &["metrics", reference.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unit_trace"));

    let zero = "[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]";
    let phi = write(
        tmp.path(),
        "phi.json",
        &format!(r#"{{"re": [[0.5,0,0,0.5],[0,0,0,0],[0,0,0,0],[0.5,0,0,0.5]], "im": {zero}}}"#),
    );
    ok(&out, &["metrics", phi.to_str().unwrap()]);
    let m = read_json(&out.join("metrics.json"));
    assert!((m["concurrence"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((m["chsh_s"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-9);

    let mixed = write(
        tmp.path(),
        "mixed.json",
        &format!(r#"{{"re": [[0.25,0,0,0],[0,0.25,0,0],[0,0,0.25,0],[0,0,0,0.25]], "im": {zero}}}"#),
    );
    ok(&out, &["--format", "csv", "metrics", mixed.to_str().unwrap()]);
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.contains("concurrence,0\n"), "{csv}");

    let bad = write(
        tmp.path(),
        "neg.json",
        &format!(r#"{{"re": [[0.5,0,0,0.9],[0,0,0,0],[0,0,0,0],[0.9,0,0,0.5]], "im": {zero}}}"#),
    );
    let o = timebin(&out, &["metrics", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("positive_semidefinite"));
}

#[test]
fn photonics_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("photonics.toml");
    let cfg = cfg.to_str().unwrap();

    let out = tmp.path().join("scan");
    ok(&out, &["--config", cfg, "--format", "csv", "scan", "--step", "0.075"]);
    let s = read_json(&out.join("scan_summary.json"));
    assert!((s["optimum"]["loss_db"].as_f64().unwrap() - 2.6).abs() <= 0.1);
    let map = std::fs::read_to_string(out.join("loss_map.csv")).unwrap();
    assert!(map.starts_with("dy\\dx,"));
    // 3 um at 0.075 um: 41 rows plus the header
    assert_eq!(map.lines().count(), 1 + 41);

    let out = tmp.path().join("overlap");
    ok(&out, &["overlap", "--mode-a", "gaussian:3.9", "--mode-b", "gaussian:3.9"]);
    let o = read_json(&out.join("overlap.json"));
    assert_eq!(o["loss_db"].as_f64().unwrap(), 0.0);
    ok(&out, &["overlap", "--dx", "-0.4"]);
    assert!(read_json(&out.join("overlap.json"))["loss_db"].as_f64().unwrap() > 2.6);

    let out = tmp.path().join("budget");
    let stdout = ok(&out, &["--config", cfg, "budget"]);
    assert!(stdout.contains("TE") && stdout.contains("6.54 dB"), "{stdout}");
    let b = read_json(&out.join("budget.json"));
    let rates: Vec<f64> = b["rates"].as_array().unwrap().iter().map(|r| r["corrected"].as_f64().unwrap()).collect();
    assert!((rates[0] - 285.714).abs() < 0.01 && (rates[1] - 560.0).abs() < 1e-9, "{rates:?}");

    let out = tmp.path().join("cal");
    ok(&out, &["--config", cfg, "calibrate"]);
    let c = read_json(&out.join("brw_mode.json"));
    assert!((c["achieved"]["eta"].as_f64().unwrap() - 0.55).abs() < 1e-9);
    // the calibrated model is usable as a mode spec
    let model = write(tmp.path(), "brw.json", &c["model"].to_string());
    ok(&out, &["overlap", "--mode-a", model.to_str().unwrap()]);
    assert!((read_json(&out.join("overlap.json"))["eta"].as_f64().unwrap() - 0.55).abs() < 1e-6);

    let o = timebin(&out, &["overlap", "--mode-a", "nonsense"]);
    assert!(!o.status.success());
}

#[test]
fn out_dir_defaults_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_timebin"))
        .args(["budget", "--format", "csv"])
        .env("TIMEBIN_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("budget.csv")).unwrap();
    assert!(csv.starts_with("kind,name,value\n"));
    assert!(tmp.path().join("budget.csv.manifest.json").exists());
}
