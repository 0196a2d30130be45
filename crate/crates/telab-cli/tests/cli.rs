//! End-to-end CLI behaviour: exit codes, emitted files, determinism.

use std::path::Path;
use std::process::Command;

fn telab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_telab"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const SMALL_CONFIG: &str = r#"{
  "potential": {"kind": "aviles_giga", "p_bar": 2.0},
  "segment": {"a_minus": [0.0, -1.0], "a_plus": [0.0, 1.0]},
  "seed": 3,
  "tasks": [
    {"task": "mass", "variants": [{"variant": "segment"}, {"variant": "jin_kohn", "b1": 0.25}]},
    {"task": "pde_check"},
    {"task": "lp", "grid": {"r": 2.0, "nx": 16, "ny": 16}, "k_reg": 1000, "p_list": [4.0, 6.0]},
    {"task": "curve", "n_vertices": 5, "opts": {"n_starts": 3, "max_sweeps": 20}},
    {"task": "compare"}
  ]
}"#;

#[test]
fn validate_accepts_a_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, SMALL_CONFIG);
    let out = telab().args(["validate"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn empty_task_list_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(
        &cfg,
        r#"{"potential": {"kind": "aviles_giga", "p_bar": 2.0},
            "segment": {"a_minus": [0.0, -1.0], "a_plus": [0.0, 1.0]},
            "tasks": []}"#,
    );
    let out = telab().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("tasks"), "{msg}");
}

#[test]
fn schema_violations_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(
        &cfg,
        r#"{"potential": {"kind": "no_such_kind", "p_bar": 2.0},
            "segment": {"a_minus": [0.0, -1.0], "a_plus": [0.0, 1.0]},
            "tasks": [{"task": "compare"}]}"#,
    );
    let out = telab().args(["validate"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("potential.kind"));
}

#[test]
fn off_grid_wells_fail_validation_when_lp_present() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(
        &cfg,
        r#"{"potential": {"kind": "aviles_giga", "p_bar": 2.0},
            "segment": {"a_minus": [0.0, -0.9437], "a_plus": [0.0, 1.0]},
            "tasks": [{"task": "lp", "grid": {"r": 2.0, "nx": 16, "ny": 16},
                       "k_reg": 100, "p_list": [4.0]}]}"#,
    );
    let out = telab().args(["validate"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid node"));
}

#[test]
fn bogus_user_bound_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(
        &cfg,
        r#"{"potential": {"kind": "aviles_giga", "p_bar": 2.0},
            "segment": {"a_minus": [0.0, -1.0], "a_plus": [0.0, 1.0]},
            "extra_bounds": [{"method": "bogus", "kind": "lower", "value": 99.0, "tol": 0.0}],
            "tasks": [{"task": "compare"}]}"#,
    );
    let out = telab().args(["run"]).arg(&cfg).arg("--out").arg(dir.path().join("out")).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sandwich"));
}

#[test]
fn full_run_emits_all_files_with_expected_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, SMALL_CONFIG);
    let out_dir = dir.path().join("out");
    let out = telab().args(["run"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let results: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap())
            .unwrap();
    assert_eq!(results["schema"], "telab-results/1");
    assert!(results["compare"].is_array());

    let compare = std::fs::read_to_string(out_dir.join("compare.csv")).unwrap();
    assert!(compare.starts_with("method,kind,value,tol\n"));
    assert!(compare.contains("exact_1d_profile,exact-1d"));
    assert!(compare.contains("pde_criterion,lower"));
    assert!(compare.contains("twice_mass_t0,upper"));

    // Concentration rows = nx · ny cells, curve rows = n_vertices.
    let conc = std::fs::read_to_string(out_dir.join("concentration.csv")).unwrap();
    assert_eq!(conc.lines().count() - 1, 16 * 16);
    let curve = std::fs::read_to_string(out_dir.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count() - 1, 5);

    // All floats in the CSVs parse back to f64 exactly (17 digits).
    for line in compare.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let v: f64 = cols[2].parse().unwrap();
        assert_eq!(format!("{v:.16e}"), cols[2]);
    }
}

#[test]
fn plotless_run_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(
        &cfg,
        r#"{"potential": {"kind": "constant", "params": {"c": 1.0}, "p_bar": 0.0},
            "segment": {"a_minus": [0.0, -1.0], "a_plus": [0.0, 1.0]},
            "tasks": [{"task": "mass", "variants": [{"variant": "segment"}]},
                      {"task": "compare"}]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = telab().args(["run"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no plot data"));
    assert!(!out_dir.join("concentration.csv").exists());
    assert!(!out_dir.join("curve.csv").exists());
}

fn strip_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.contains("timestamp_unix_s")).collect::<Vec<_>>().join("\n")
}

#[test]
fn reruns_are_byte_identical_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, SMALL_CONFIG);
    let mut docs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out =
            telab().args(["run"]).arg(&cfg).arg("--out").arg(&out_dir).arg("--seed").arg("17").output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        docs.push(std::fs::read_to_string(out_dir.join("results.json")).unwrap());
    }
    assert_eq!(strip_timestamp(&docs[0]), strip_timestamp(&docs[1]));
}
