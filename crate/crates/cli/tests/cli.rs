use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fenn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fenn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn freudenthal_inputs(dir: &TempDir) {
    let o = fenn(
        &["freudenthal", "--n", "2", "--N", "2", "-o", "mesh.json", "--function-output", "f.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).contains("N_T=8 H^i=5 H^b=4"));
}

#[test]
fn build_reports_sizes_and_writes_the_network() {
    let dir = TempDir::new().unwrap();
    freudenthal_inputs(&dir);
    let o = fenn(
        &["build", "--mesh", "mesh.json", "--function", "f.json", "--epsilon", "1e-3", "-o", "net.json", "--samples", "200"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{o:?}");
    let out = stdout(&o);
    assert!(out.starts_with("h1=14 h2=9 H^i=5 H^b=4 N_T=8\n"), "{out}");
    assert!(out.contains("check=pass"));
    assert!(dir.path().join("net.json").exists());

    let o = fenn(&["counts", "--mesh", "mesh.json", "--network", "net.json"], dir.path());
    assert_eq!(code(&o), 0);
    let o = fenn(
        &["verify", "--network", "net.json", "--mesh", "mesh.json", "--function", "f.json", "--epsilon", "1e-3", "--samples", "100"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{o:?}");
}

#[test]
fn output_bias_drops_one_neuron() {
    let dir = TempDir::new().unwrap();
    freudenthal_inputs(&dir);
    let o = fenn(
        &["build", "--mesh", "mesh.json", "--function", "f.json", "--epsilon", "1e-3", "--output-bias", "--samples", "100"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).starts_with("h1=14 h2=8 "));
}

#[test]
fn two_interval_constant_function() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "mesh.json",
        r#"{"dimension": 1, "domain_hull": {"halfspaces": [{"w": [1], "b": 0}, {"w": [-1], "b": 1}]},
            "cells": [{"vertices": [[0], [0.5]]}, {"vertices": [[0.5], [1]]}]}"#,
    );
    write(dir.path(), "f.json", r#"{"kind": "constant", "values": [2.0, -1.0]}"#);
    let o = fenn(&["build", "--mesh", "mesh.json", "--function", "f.json", "--epsilon", "0.01", "--samples", "100"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).starts_with("h1=4 h2=3 "));

    let o = fenn(
        &["build", "--mesh", "mesh.json", "--function", "f.json", "--epsilon", "0.01", "--compact-support", "-o", "c.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{o:?}");
    write(dir.path(), "p.json", r#"{"points": [[-1.0], [0.25], [0.75], [3.0]]}"#);
    let o = fenn(&["eval", "--network", "c.json", "--points", "p.json"], dir.path());
    assert_eq!(code(&o), 0);
    let values: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 4);
    assert_eq!(values[0], 0.0);
    assert!((values[1] - 2.0).abs() < 1e-9 && (values[2] + 1.0).abs() < 1e-9);
    assert_eq!(values[3], 0.0);
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = TempDir::new().unwrap();
    freudenthal_inputs(&dir);
    let zero = fenn(&["build", "--mesh", "mesh.json", "--function", "f.json", "--epsilon", "0"], dir.path());
    assert_eq!(code(&zero), 4);
    assert!(String::from_utf8_lossy(&zero.stderr).contains("epsilon must be positive"));

    write(dir.path(), "broken.json", "{\"dimension\": ");
    let parse = fenn(&["counts", "--mesh", "broken.json", "--network", "x.json"], dir.path());
    assert_eq!(code(&parse), 2);

    write(
        dir.path(),
        "overlap.json",
        r#"{"dimension": 1, "cells": [{"vertices": [[0], [1]]}, {"vertices": [[0.5], [1.5]]}]}"#,
    );
    write(dir.path(), "c.json", r#"{"kind": "constant", "values": [1, 1]}"#);
    let invalid = fenn(&["build", "--mesh", "overlap.json", "--function", "c.json", "--epsilon", "0.01"], dir.path());
    assert_eq!(code(&invalid), 3, "{invalid:?}");

    write(
        dir.path(),
        "zero.json",
        r#"{"arch": "fnn2", "n": 2, "h1": 1, "h2": 1, "W1": [[0, 0]], "b1": [0], "W2": [], "b2": [0], "w3": [0]}"#,
    );
    let o = fenn(
        &["verify", "--network", "zero.json", "--mesh", "mesh.json", "--function", "f.json", "--epsilon", "1e-3", "--samples", "50"],
        dir.path(),
    );
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).contains("check=fail"));
}

#[test]
fn builds_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    freudenthal_inputs(&dir);
    for name in ["a.json", "b.json"] {
        let o = fenn(
            &["--threads", "2", "build", "--mesh", "mesh.json", "--function", "f.json", "--epsilon", "1e-3", "-o", name, "--samples", "50"],
            dir.path(),
        );
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn tensor_network_round_trip() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "u.json",
        r#"{"grids": [[0, 0.5, 1, 2], [0, 1, 2, 3, 4]], "shape": [4, 5],
            "coefficients": [1, 2, 3, 4, 5, 0, 1, 0, 1, 0, 2, 2, 2, 2, 2, 3, 1, 4, 1, 5]}"#,
    );
    let o = fenn(&["tnn-build", "--tensor-fe", "u.json", "-o", "t.json"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("rank=4\n") && out.contains("widths=4,5\n"), "{out}");
    let o = fenn(&["tnn-verify", "--tnn", "t.json", "--tensor-fe", "u.json", "--samples", "2000"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");

    write(dir.path(), "p.json", "[[0.5, 1.0], [2.0, 4.0]]");
    let o = fenn(&["eval", "--network", "t.json", "--points", "p.json"], dir.path());
    let values: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert!((values[0] - 1.0).abs() < 1e-12 && (values[1] - 5.0).abs() < 1e-12, "{values:?}");
}

#[test]
fn convergence_writes_csv_and_checks_the_band() {
    let dir = TempDir::new().unwrap();
    let o = fenn(
        &["convergence", "--n", "1", "--Ns", "2,4,8,16", "--target", "quadratic", "--samples", "20000",
          "--epsilon-power", "5", "--csv", "table.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{o:?}");
    let csv = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("N,h1,h2,error,stderr"));
    assert_eq!(csv.lines().count(), 5);

    // an impossible band must fail with the verification exit code
    let o = fenn(
        &["convergence", "--n", "1", "--Ns", "2,4", "--samples", "5000", "--slope-min", "-10", "--slope-max", "-9"],
        dir.path(),
    );
    assert_eq!(code(&o), 5);
}
