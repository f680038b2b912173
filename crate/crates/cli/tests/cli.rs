use std::fs;
use std::path::Path;

use pextremal_cli::{run, CliError, MANIFEST_FILE, SCHEMA_VERSION};
use serde_json::Value;

fn invoke(args: &[&str]) -> Result<String, CliError> {
    let mut out = Vec::new();
    let mut full = vec!["pextremal"];
    full.extend_from_slice(args);
    run(full, &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

fn invoke_json(args: &[&str]) -> Value {
    serde_json::from_str(&invoke(args).unwrap()).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

fn path(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn eval_reports_closed_forms_and_hull_points() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    let v = invoke_json(&["eval", "--q", "inf", "--z", "1,1", "--out", d]);
    assert!((v["value"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-10);
    assert_eq!(v["method"], "closed_form_linf2d");
    let v = invoke_json(&["eval", "--q", "inf", "--z", "0+1.5i,0", "--out", d]);
    assert!((v["value"].as_f64().unwrap() - 1.5f64.ln()).abs() < 1e-10);
    let v = invoke_json(&["eval", "--q", "1", "--z", "3,4i", "--out", d]);
    assert!((v["value"].as_f64().unwrap() - 5f64.ln()).abs() < 1e-12);
    let v = invoke_json(&["eval", "--q", "2", "--z", "0.5,0.5i", "--out", d]);
    assert_eq!(v["value"].as_f64().unwrap(), 0.0);
    assert_eq!(v["method"], "hull_interior");
    let v = invoke_json(&["eval", "--q", "3", "--z", "1,1,1", "--out", d]);
    assert_eq!(v["method"], "numeric_kkt");
    assert!(v["kkt_residual"].as_f64().unwrap() <= 1e-10);
    let m = manifest(dir.path());
    assert_eq!(m["schema_version"], SCHEMA_VERSION);
    assert_eq!(m["command"], "eval");
    assert_eq!(m["parameters"]["q"], "3");
}

#[test]
fn rate_matches_the_analytic_target() {
    let dir = tempfile::tempdir().unwrap();
    let v = invoke_json(&[
        "rate",
        "--f",
        "f2",
        "--a",
        "2",
        "--q",
        "3",
        "--out",
        path(dir.path()),
    ]);
    assert!((v["log_r"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-6);
    assert!((v["analytic_target"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-15);
    let v = invoke_json(&["rate", "--f", "f3", "--q", "1", "--out", path(dir.path())]);
    assert!((v["log_r"].as_f64().unwrap() - 2f64.sqrt().ln()).abs() < 1e-6);
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    let cases: Vec<Vec<&str>> = vec![
        vec!["eval", "--q", "0.5", "--z", "1,1", "--out", d],
        vec!["eval", "--q", "2", "--z", "1+,1", "--out", d],
        vec!["rate", "--f", "f1", "--q", "2", "--out", d],
        vec!["rate", "--f", "f2", "--a", "0.5", "--q", "2", "--out", d],
        vec!["approx", "--f", "f9", "--out", d],
        vec![
            "fekete", "--q", "2", "--n", "2", "--grid-s", "3", "--out", d,
        ],
        vec!["nonsense"],
    ];
    for args in cases {
        let err = invoke(&args).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{args:?}: {err}");
    }
}

#[test]
fn oversized_fekete_basis_exits_with_code_five() {
    let dir = tempfile::tempdir().unwrap();
    let err = invoke(&[
        "fekete",
        "--q",
        "inf",
        "--n",
        "25",
        "--out",
        path(dir.path()),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 5);
}

#[test]
fn unwritable_output_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let err = invoke(&[
        "approx",
        "--f",
        "f1",
        "--nmax",
        "3",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn help_and_version_succeed() {
    assert!(invoke(&["--help"]).unwrap().contains("randfield"));
    assert!(invoke(&["--version"])
        .unwrap()
        .contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn approx_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let v = invoke_json(&[
        "approx",
        "--f",
        "f2",
        "--a",
        "2",
        "--q",
        "1,inf",
        "--nmax",
        "12",
        "--out",
        path(dir.path()),
    ]);
    assert!(v["fitted_log_rate"]["1"].as_f64().unwrap() > 0.0);
    let text = fs::read_to_string(dir.path().join("approx_f2.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "f,q,n,d_n,error");
    assert_eq!(lines.count(), 24);
    assert!(!text.contains('\r'));
    let m = manifest(dir.path());
    assert_eq!(m["command"], "approx");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 1);
}

#[test]
fn fekete_and_randfield_outputs_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    invoke(&[
        "fekete",
        "--q",
        "inf",
        "--n",
        "2",
        "--grid-s",
        "8",
        "--grid-phi",
        "8",
        "--sweeps",
        "5",
        "--out",
        d,
    ])
    .unwrap();
    let pts = fs::read_to_string(dir.path().join("fekete_points.csv")).unwrap();
    assert_eq!(
        pts.lines().next().unwrap(),
        "re_z1,im_z1,re_z2,im_z2,abs_z1"
    );
    assert_eq!(pts.lines().count(), 1 + 9);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fekete_summary.json")).unwrap())
            .unwrap();
    for key in ["n", "d_n", "l_n", "log_abs_vdm", "delta_estimate", "seed"] {
        assert!(summary.get(key).is_some(), "{key}");
    }
    assert_eq!(manifest(dir.path())["seed"], 1);

    invoke(&[
        "randfield",
        "--q",
        "1",
        "--n",
        "4,8",
        "--seeds",
        "1,2",
        "--out",
        d,
    ])
    .unwrap();
    let summary = fs::read_to_string(dir.path().join("randfield_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2);
    let rows = fs::read_to_string(dir.path().join("randfield.csv")).unwrap();
    assert_eq!(rows.lines().next().unwrap(), "n,seed,grid_mean_abs_dev");
    assert_eq!(rows.lines().count(), 1 + 2 * 2);
}
