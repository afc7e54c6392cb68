use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn isospec(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isospec"))
        .args(args)
        .current_dir(cwd)
        .env("ISOSPEC_GRID_PRESET", "fast")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(path: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn gen_writes_potential_states_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = isospec(
        &["gen", "--l", "2", "--k", "-1", "--lambda", "2", "--rmax", "40", "--n", "4000", "--out", "g"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g = dir.path().join("g");
    let header = fs::read_to_string(g.join("potential.csv")).unwrap();
    assert!(header.starts_with("r,V_partner,V_base,delta\n"));
    assert_eq!(csv_column(&g.join("potential.csv"), 0).len(), 4000);
    assert!(fs::read_to_string(g.join("missing_state_k-1.csv")).unwrap().starts_with("r,psi\n"));

    let m = json(&g.join("manifest.json"));
    let levels: Vec<f64> = m["predicted"]["levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["energy"].as_f64().unwrap())
        .collect();
    assert_eq!(levels, vec![-1.0, -1.0 / 9.0, -1.0 / 16.0]);
    assert_eq!(m["predicted"]["holes"][0]["energy"], -0.25);
    assert_eq!(m["predicted"]["levels"][0]["origin"], "new");
    assert_eq!(m["lambda_domains"][0]["interval"], "(1, inf)");
    assert_eq!(m["config"]["grid"]["n_points"], 4000);
    assert_eq!(m["missing_states"][0]["nodes"], 0);
}

#[test]
fn trivial_member_has_zero_delta() {
    let dir = tempfile::tempdir().unwrap();
    let out = isospec(&["gen", "--l", "2", "--k", "0", "--lambda", "0", "--rmax", "20", "--n", "500", "--out", "g"], dir.path());
    assert!(out.status.success());
    assert!(csv_column(&dir.path().join("g/potential.csv"), 3).iter().all(|d| *d == 0.0));
}

#[test]
fn domain_violations_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = isospec(&["gen", "--l", "2", "--k", "-1", "--lambda", "0", "--out", "g"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("not in (1, inf)"), "{msg}");
    assert!(!dir.path().join("g").exists(), "nothing is written before validation");

    // paired-domain violation: the lower seed inside its own single-seed domain
    let out = isospec(&["verify", "--l", "4", "--k", "-3", "--m", "0", "--lambdas=2,0.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // malformed inputs
    for args in [
        &["gen", "--l", "2", "--k", "1", "--lambda", "0"][..],
        &["gen", "--l", "2", "--ks=0,-1,-2", "--lambdas=0,0,0"][..],
        &["gen", "--l", "2", "--k", "0", "--lambdas=0,1"][..],
        &["gen", "--l", "2", "--k", "0", "--lambda", "0", "--n", "1"][..],
        &["gen", "--bogus"][..],
    ] {
        assert_eq!(isospec(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unknown_grid_preset_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_isospec"))
        .args(["gen", "--l", "2", "--k", "0", "--lambda", "0"])
        .current_dir(dir.path())
        .env("ISOSPEC_GRID_PRESET", "enormous")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = isospec(&["verify", "--l", "2", "--k", "-1", "--lambda", "2", "--levels", "3", "--tol", "5e-4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = json(&dir.path().join("spectrum_report.json"));
    assert_eq!(r["passed"], true);
    assert_eq!(r["report"]["holes_confirmed"][0], true);

    let out = isospec(
        &["verify", "--l", "4", "--k", "-3", "--m", "0", "--lambdas=-0.5,0.5", "--out", "fig2.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.path().join("fig2.json"));
    assert_eq!(r["report"]["holes_expected"], serde_json::json!([-0.25, -1.0 / 9.0]));
    assert_eq!(r["report"]["holes_confirmed"], serde_json::json!([true, true]));

    let out = isospec(
        &["verify", "--l", "2", "--k", "-1", "--lambda", "2", "--inject-prediction-error", "0.01", "--out", "bad.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&dir.path().join("bad.json"))["passed"], false);
}

#[test]
fn verify_csv_has_manifest_sibling() {
    let dir = tempfile::tempdir().unwrap();
    let out = isospec(
        &["verify", "--l", "2", "--k", "0", "--lambda", "0.5", "--format", "csv", "--out", "r.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(text.starts_with("index,predicted,computed,abs_error,within_tol\n"));
    assert_eq!(json(&dir.path().join("r.manifest.json"))["config"]["family"]["l"], 2);
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"family":{"l":3,"chain":[{"k":-1,"lambda":0.5},{"k":0,"lambda":0.2}]},
                 "grid":{"r_max":30.0,"n_points":3000},"levels":4,"format":"json"}"#;
    fs::write(dir.path().join("run.json"), cfg).unwrap();
    let a = isospec(&["gen", "--config", "run.json", "--out", "a"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = isospec(
        &["gen", "--l", "3", "--k", "-1", "--m", "0", "--lambdas=0.5,0.2", "--rmax", "30", "--n", "3000", "--levels", "4", "--format", "json", "--out", "b"],
        dir.path(),
    );
    assert!(b.status.success());
    for f in ["potential.json", "missing_state_k-1.json", "missing_state_k0.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let m = json(&dir.path().join("a/manifest.json"));
    assert_eq!(m["lambda_domains"][0]["rule"], "paired_lower");
    let nodes: Vec<u64> = m["missing_states"].as_array().unwrap().iter().map(|s| s["nodes"].as_u64().unwrap()).collect();
    // the state at the lower energy is the ground state
    assert_eq!(nodes, vec![0, 1]);

    fs::write(dir.path().join("bad.json"), r#"{"famly":{}}"#).unwrap();
    assert_eq!(isospec(&["gen", "--config", "bad.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["x", "y"] {
        let o = isospec(&["gen", "--l", "3", "--k", "-1", "--lambda", "2", "--rmax", "25", "--n", "2500", "--out", out], dir.path());
        assert!(o.status.success());
    }
    for f in ["potential.csv", "missing_state_k-1.csv"] {
        assert_eq!(fs::read(dir.path().join("x").join(f)).unwrap(), fs::read(dir.path().join("y").join(f)).unwrap());
    }
}

#[test]
fn chain_of_order_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = isospec(
        &["gen", "--l", "4", "--ks=0,-1,-2", "--lambdas=0.5,0.5,0.5", "--rmax", "60", "--n", "30000", "--out", "c"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&dir.path().join("c/manifest.json"));
    assert_eq!(m["l_out"], 1);
    assert_eq!(m["missing_states"][0]["method"], "inverse_iteration");
    assert_eq!(m["lambda_domains"][0]["rule"], "wronskian_scan");
}

#[test]
fn figure_presets() {
    let dir = tempfile::tempdir().unwrap();
    assert!(isospec(&["figure", "fig1", "--out", "f"], dir.path()).status.success());
    assert!(isospec(&["figure", "fig2", "--out", "f"], dir.path()).status.success());
    let path = dir.path().join("f/fig1.csv");
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("r,V_base,V_lambda_1.5,V_lambda_2,V_lambda_5,V_lambda_20\n"));
    let r = csv_column(&path, 0);
    let base = csv_column(&path, 1);
    for (x, v) in r.iter().zip(&base) {
        assert!((v - (2.0 / (x * x) - 2.0 / x)).abs() <= 1e-12 * v.abs().max(1.0));
    }
    // each λ column has an interior global minimum
    for col in 2..6 {
        let v = csv_column(&path, col);
        let (i, _) = v.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!(i > 0 && i + 1 < v.len(), "column {col}");
    }
    let d = json(&dir.path().join("f/fig2.json"));
    assert_eq!(d["base"]["l"], 2);
    assert_eq!(d["base"]["levels"][0], -1.0 / 9.0);
    assert_eq!(d["partner"]["spectrum"]["levels"][1]["energy"], -1.0 / 16.0);
    assert_eq!(d["gap"]["lower"], -1.0);
    assert_eq!(d["gap"]["upper"], -1.0 / 16.0);
    assert_eq!(d["gap"]["missing"], serde_json::json!([-0.25, -1.0 / 9.0]));
}
