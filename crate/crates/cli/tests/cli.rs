use std::fs;
use std::process::{Command, Output};

use tempfile::TempDir;

fn latshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latshift"))
        .args(args)
        .env_remove("LATSHIFT_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn two_point_shift_table() {
    let dir = TempDir::new().unwrap();
    let z = dir.path().join("one.txt");
    fs::write(&z, "1\n").unwrap();
    let out = latshift(&["cbc-shift", "--n", "2", "--smax", "1", "--weights", "prod:1/j^2", "--z-file", z.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "s,m,kappa,kappa0"));
    assert!(text.lines().any(|l| l == "1,1,0.707107,1.414214"), "{text}");
    assert!(text.contains("# z_digest=sha256:"));
}

#[test]
fn bound_value() {
    let out = latshift(&["bound", "--n", "3", "--smax", "1", "--weights", "explicit:[1]", "--lambda", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0.288675");
    let t1 = latshift(&["bound", "--n", "2", "--smax", "1", "--weights", "explicit:[1]", "--theorem1"]);
    assert_eq!(stdout(&t1).trim(), "0.020833");
}

#[test]
fn verify_grid_passes() {
    let out = latshift(&["verify", "--max-n", "12", "--max-s", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains(" 0 violations"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(latshift(&["bound", "--n", "3"]).status.code(), Some(2));
    assert_eq!(latshift(&["frobnicate"]).status.code(), Some(2));
    let bad = latshift(&["bound", "--n", "3", "--smax", "1", "--weights", "prod:sqrt", "--lambda", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn vector_file_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    let z = dir.path().join("z.txt");
    fs::write(&z, "1\n2048\n").unwrap();
    let out = latshift(&["cbc-shift", "--n", "2048", "--smax", "2", "--weights", "prod:1/j^2", "--z-file", z.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn construct_then_shift_then_evaluate() {
    let dir = TempDir::new().unwrap();
    let z = dir.path().join("z.txt");
    let shift = dir.path().join("shift.txt");
    let table = dir.path().join("table.json");
    let p = |x: &std::path::Path| x.to_str().unwrap().to_string();

    let out = latshift(&["cbc-z", "--n", "61", "--smax", "4", "--weights", "prod:geo:0.5", "--out", &p(&z)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&z).unwrap().lines().next(), Some("1"));

    let out = latshift(&[
        "--jobs", "2", "cbc-shift", "--n", "61", "--smax", "4", "--weights", "prod:geo:0.5", "--z-file", &p(&z),
        "--format", "json", "--out", &p(&table), "--shift-out", &p(&shift),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = fs::read_to_string(&table).unwrap();
    let t = latshift::io::ShiftTable::parse(&json, latshift::io::TableFormat::Json).unwrap();
    assert_eq!(t.rows.len(), 4);

    let out = latshift(&["wce", "--n", "61", "--weights", "prod:geo:0.5", "--z-file", &p(&z), "--shift-file", &p(&shift)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    let kappa: f64 = last[3].parse().unwrap();
    assert!((kappa - t.rows[3].kappa).abs() < 1e-9, "{kappa} vs {}", t.rows[3].kappa);

    let out = latshift(&["integrate", "--n", "61", "--z-file", &p(&z), "--f", "const", "--shift-file", &p(&shift)]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("error 0.000000e0"), "{}", stdout(&out));
}

#[test]
fn random_integration_is_seeded() {
    let dir = TempDir::new().unwrap();
    let z = dir.path().join("z.txt");
    fs::write(&z, "1 1\n2 19\n3 27\n").unwrap();
    let args = ["integrate", "--n", "64", "--z-file", z.to_str().unwrap(), "--f", "prod", "--random", "--q", "8", "--seed", "5"];
    let a = stdout(&latshift(&args));
    let b = stdout(&latshift(&args));
    assert_eq!(a, b);
    assert!(a.contains("std_error"));
}
