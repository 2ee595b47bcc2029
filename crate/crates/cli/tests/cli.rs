use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn eqlab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eqlab"));
    cmd.args(args).env_remove("EQLAB_OUT");
    if let Some(p) = env_out {
        cmd.env("EQLAB_OUT", p);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_TOMO: &str = r#"{
  "experiment": "fig4_tomography",
  "seed": 7,
  "params": { "state": [0.2, 0.1, -0.4], "beta": 0.4, "shots": 5000 }
}"#;

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.json", SMALL_TOMO);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, jobs) in [(&a, "1"), (&b, "4")] {
        let o = eqlab(&["fig4_tomography", "--config", &cfg, "--jobs", jobs, "--out", out.to_str().unwrap()], None);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["fig4_spectra.csv", "fig4_reconstruction.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["params"]["shots"], 5000);
    assert_eq!(m["files"].as_array().unwrap().len(), 2);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.json", SMALL_TOMO);
    let out = dir.path().join("o");
    let o = eqlab(&["fig4_tomography", "--config", &cfg, "--seed", "8", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 8);
}

#[test]
fn parallel_grid_matches_serial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        r#"{"experiment": "fig1_maps", "params": {"comb_sizes": [1, 10], "theta_points": 9, "beta_points": 7}}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let o = eqlab(&["fig1_maps", "--config", &cfg, "--jobs", jobs, "--out", out.to_str().unwrap()], None);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let csv = fs::read_to_string(a.join("fig1_maps.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.join("fig1_maps.csv")).unwrap());
    assert_eq!(csv.lines().count(), 1 + 2 * 9 * 7);
    assert!(csv.starts_with("n[1],theta[rad],"));
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), "ok.json", r#"{"experiment": "fig2_region", "params": {"points": 10}}"#);
    let o = eqlab(&["validate", &ok], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let unknown = write_config(dir.path(), "u.json", r#"{"experiment": "fig2_region", "params": {"pionts": 10}}"#);
    let o = eqlab(&["validate", &unknown], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("pionts"), "{}", stderr(&o));

    let missing = write_config(dir.path(), "s.json", r#"{"experiment": "sweep", "params": {"parameter": "beta"}}"#);
    let o = eqlab(&["validate", &missing], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("range"), "{}", stderr(&o));

    let bad_exp = write_config(dir.path(), "e.json", r#"{"experiment": "fig7"}"#);
    assert_eq!(eqlab(&["validate", &bad_exp], None).status.code(), Some(2));

    let o = eqlab(&["validate", dir.path().join("absent.json").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mismatched_subcommand_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.json", SMALL_TOMO);
    let o = eqlab(&["sweep", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_abort_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "o.json",
        r#"{"experiment": "oracle_check", "params": {"betas": [1.0], "steps": 20000, "window_pad": -2}}"#,
    );
    let o = eqlab(&["oracle_check", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("boundary leak"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_requested_axis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"experiment": "sweep", "params": {"parameter": "gamma_0",
            "range": {"start": 1e-3, "stop": 1.0, "points": 4, "log": true}}}"#,
    );
    let out = dir.path().join("o");
    let o = eqlab(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("gamma_0[1/s],ss_x[1]"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn default_output_follows_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "r.json",
        r#"{"experiment": "fig2_region", "params": {"gamma_ratios": [1.0], "points": 50, "sphere_samples": 10}}"#,
    );
    let root = dir.path().join("env");
    let o = eqlab(&["fig2_region", "--config", &cfg], Some(&root));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(root.join("fig2_region/manifest.json").exists());
    assert!(root.join("fig2_region/fig2_points.csv").exists());
}
