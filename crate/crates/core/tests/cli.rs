use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vacuum-shake"));
    c.env_remove("VACUUM_SHAKE_THREADS");
    c
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn rate_sweep_3d_default_config() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(&manifest_dir().join("configs/rate_sweep_3d.json"), &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("rates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
    let json: Value = serde_json::from_str(&fs::read_to_string(out.join("rates.json")).unwrap()).unwrap();
    assert!((json["exponent"].as_f64().unwrap() - 7.0).abs() < 0.1);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "RateSweep3D");
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 2);
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn output_is_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = manifest_dir().join("configs/scattering.json");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&cfg, &a, &["--threads", "1"]).status.success());
    let o = bin()
        .env("VACUUM_SHAKE_THREADS", "4")
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .args(["--threads", "1"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let mb: Value = serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(mb["threads"], 4);
    for name in [
        "on_shell.csv",
        "excited_amplitude.csv",
        "tensor_slice.csv",
        "scattering.json",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn zero_dipole_dressing_dump_is_all_zero() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"scenario": "DressingDump", "atom": {"dipole": 0.0}, "dressing": {"times": [0, 3.5]}}"#,
    );
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("dressing.csv")).unwrap();
    for line in table.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(cols[3..].iter().all(|&v| v == 0.0), "{line}");
    }
    let pairs = fs::read_to_string(out.join("ground_pairs.csv")).unwrap();
    for line in pairs.lines().skip(1) {
        assert!(line.split(',').skip(2).all(|v| v.parse::<f64>().unwrap() == 0.0));
    }
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"scenario": "Scattering3Photon", "scattering": {"gamma_prime": -1e-3}}"#,
    );
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[schema]"));
    assert!(!out.exists());

    let cfg = write_config(tmp.path(), "typo.json", r#"{"scenario": "RateSweep3D", "sweeep": {}}"#);
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn capacity_exits_4() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "big.json",
        r#"{"scenario": "OracleCompare", "grid": {"n_modes": 40}, "oracle": {"n_max": 6}}"#,
    );
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn schema_subcommand_prints_the_schema() {
    let o = bin().arg("schema").output().unwrap();
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["required"][0], "scenario");
}

#[test]
fn compare_detects_a_perturbed_row() {
    let tmp = TempDir::new().unwrap();
    let base = manifest_dir().join("baselines/rates_3d.csv");
    let text = fs::read_to_string(&base).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut cols: Vec<String> = lines[5].split(',').map(str::to_string).collect();
    let rate: f64 = cols[1].parse().unwrap();
    cols[1] = format!("{:.16e}", rate * (1.0 + 1e-3));
    lines[5] = cols.join(",");
    let bumped = write_config(tmp.path(), "bumped.csv", &(lines.join("\n") + "\n"));
    let tol = write_config(tmp.path(), "tol.json", r#"{"default": 1e-4}"#);

    let same = bin().arg("compare").arg(&base).arg(&base).output().unwrap();
    assert!(same.status.success());
    let report: Value = serde_json::from_slice(&same.stdout).unwrap();
    assert_eq!(report["max_deviation"], 0.0);

    let o = bin()
        .arg("compare")
        .arg(&bumped)
        .arg(&base)
        .arg("--tol-file")
        .arg(&tol)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 5, column rate"));

    let json = manifest_dir().join("baselines/rate_constant.json");
    let o = bin().arg("compare").arg(&bumped).arg(&json).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn regenerated_rate_constant_matches_the_frozen_baseline() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert!(run(&manifest_dir().join("configs/rate_sweep_3d.json"), &out, &[])
        .status
        .success());
    let rates: Value = serde_json::from_str(&fs::read_to_string(out.join("rates.json")).unwrap()).unwrap();
    let fresh = tmp.path().join("constant.json");
    fs::write(
        &fresh,
        serde_json::json!({"constant_c": rates["constant_c"], "exponent": rates["exponent"]}).to_string(),
    )
    .unwrap();
    let o = bin()
        .arg("compare")
        .arg(&fresh)
        .arg(manifest_dir().join("baselines/rate_constant.json"))
        .arg("--tol-file")
        .arg(manifest_dir().join("baselines/tolerances.json"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin()
        .arg("compare")
        .arg(out.join("rates.csv"))
        .arg(manifest_dir().join("baselines/rates_3d.csv"))
        .arg("--tol-file")
        .arg(manifest_dir().join("baselines/tolerances.json"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn every_shipped_config_runs() {
    let tmp = TempDir::new().unwrap();
    for entry in fs::read_dir(manifest_dir().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let out = tmp.path().join(path.file_stem().unwrap());
        let o = run(&path, &out, &[]);
        assert!(
            o.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(out.join("manifest.json").exists());
    }
}
