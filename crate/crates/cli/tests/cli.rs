use std::process::{Command, Output};

use vvmf::report::decode_json;

fn vvmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vvmf")).args(args).env_remove("VVMF_PREC_BITS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn catalog_formats() {
    let text = vvmf(&["catalog"]);
    assert!(text.status.success());
    assert!(stdout(&text).lines().any(|l| l.starts_with("su2_1") && l.ends_with("0, 1/4")));
    let json = vvmf(&["catalog", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    let labels: Vec<&str> = v.as_array().unwrap().iter().map(|d| d["label"].as_str().unwrap()).collect();
    for label in ["su2_1", "e7_1", "ising", "su3_1", "b7_1"] {
        assert!(labels.contains(&label), "{label}");
    }
}

#[test]
fn compute_json_decodes() {
    let o = vvmf(&["compute", "--family", "su2_1", "--c", "1", "--h", "1/4", "--terms", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let report = decode_json(&stdout(&o)).unwrap();
    let row = &report.rows[0];
    assert!(row.is_accepted());
    assert_eq!(row.components[0].coefficients, ["1", "3", "4", "7", "13", "19"]);
    assert_eq!(row.components[1].coefficients, ["2", "2", "6", "8", "14", "20"]);
    assert_eq!(row.config.terms, 6);
}

#[test]
fn folded_and_unfolded_h_agree() {
    let a = vvmf(&["compute", "--family", "su3_1", "--c", "2", "--h", "1/3"]);
    let b = vvmf(&["compute", "--family", "su3_1", "--c", "2", "--h", "1/3,1/3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn csv_and_markdown_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let o = vvmf(&["scan", "--family", "su2_1", "--cmax", "17", "--format", "csv", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 3);
    assert!(text.contains("su2_1,17,5/4,"));
    let md = vvmf(&["scan", "--family", "su2_1", "--cmax", "9", "--format", "md"]);
    assert!(stdout(&md).starts_with("| family |"));
}

#[test]
fn precision_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_vvmf")).args(["compute", "--family", "su2_1", "--c", "1", "--h", "1/4"]).env("VVMF_PREC_BITS", "320").output().unwrap();
    let report = decode_json(&stdout(&o)).unwrap();
    assert_eq!(report.rows[0].config.precision_bits, 320);
    let bad = Command::new(env!("CARGO_BIN_EXE_vvmf")).args(["catalog"]).env("VVMF_PREC_BITS", "8").output().unwrap();
    assert_eq!(bad.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_vvmf")).args(["compute", "--family", "su2_1", "--c", "1", "--h", "1/4"]).env("VVMF_PREC_BITS", "8").output().unwrap();
    assert_eq!(bad.status.code(), Some(64));
}

#[test]
fn usage_errors() {
    for args in [
        &["compute", "--family", "su2_1", "--c", "2", "--h", "1/4"][..],
        &["compute", "--family", "nope", "--c", "1", "--h", "1/4"],
        &["compute", "--family", "su2_1", "--c", "1", "--h", "1/x"],
        &["compute", "--family", "su2_1", "--c", "1", "--h", "1/3"],
        &["scan", "--family", "su2_1", "--cmax", "9", "--terms", "0"],
        &["scan", "--family", "su2_1", "--cmax", "-1"],
        &["verify", "--scope", "rank4"],
        &["frobnicate"],
    ] {
        assert_eq!(vvmf(args).status.code(), Some(64), "{args:?}");
    }
}

#[test]
fn io_error_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("rows.json");
    let o = vvmf(&["scan", "--family", "su2_1", "--cmax", "9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(74));
}

#[test]
fn strict_solver_failure() {
    let args = ["compute", "--family", "su2_1", "--c", "1", "--h", "1/4", "--max-denominator", "1"];
    let lax = vvmf(&args);
    assert_eq!(lax.status.code(), Some(0));
    assert_eq!(decode_json(&stdout(&lax)).unwrap().rows[0].status, "solver_failure");
    let strict = vvmf(&[&args[..], &["--strict"]].concat());
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn dump_connection() {
    let o = vvmf(&["compute", "--family", "su2_1", "--c", "1", "--h", "1/4", "--dump-connection"]);
    let row = &decode_json(&stdout(&o)).unwrap().rows[0];
    let conn = row.connection.as_ref().unwrap();
    assert_eq!(conn.gauge_ratios, ["1", "-1/56"]);
    assert_eq!(conn.a.len(), 2);
}
