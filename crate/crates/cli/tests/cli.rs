use std::fs;
use std::path::{Path, PathBuf};

use rmm_cli::cli::run;
use rmm_cli::parse_spec;

fn rmm(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("rmm").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn examples_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples")
}

#[test]
fn eval_prints_point_and_value() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "pi.yaml", "pi\n");
    let (code, out, _) = rmm(&[
        "eval",
        "--spec",
        spec.to_str().unwrap(),
        "--point",
        "0.5,0.5",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "0.5,0.5,0.25\n");

    let spec = write_spec(dir.path(), "pi3.yaml", "pi3\n");
    let (code, out, _) = rmm(&[
        "eval",
        "--spec",
        spec.to_str().unwrap(),
        "--point",
        "0.5,0.5,0.5",
        "--point",
        "1,1,0.3",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "0.5,0.5,0.5,0.125\n1,1,0.3,0.3\n");
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "bad.yaml", "{base: efgm, theta: 2}\n");
    let (code, _, err) = rmm(&[
        "eval",
        "--spec",
        spec.to_str().unwrap(),
        "--point",
        "0.5,0.5",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("$.theta"), "{err}");

    assert_eq!(rmm(&["frobnicate"]).0, 1);
    assert_eq!(rmm(&["eval", "--spec", "x.yaml", "--point", "0.5,2"]).0, 1);
    assert_eq!(
        rmm(&[
            "eval",
            "--spec",
            "/nonexistent/x.yaml",
            "--point",
            "0.5,0.5"
        ])
        .0,
        1
    );
    let good = write_spec(dir.path(), "pi.yaml", "pi\n");
    assert_eq!(
        rmm(&[
            "eval",
            "--spec",
            good.to_str().unwrap(),
            "--point",
            "0.5,0.5,0.5"
        ])
        .0,
        1
    );
    assert_eq!(rmm(&["--help"]).0, 0);
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "c.yaml",
        "{transform: rmm, base: w, f: tent, g: {quadratic, c: 1}}\n",
    );
    let (code, out, _) = rmm(&["validate", "--spec", spec.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("2-increasing  ok"));
    // a negative tolerance cannot be met, which exercises the failure path
    let (code, out, _) = rmm(&["validate", "--spec", spec.to_str().unwrap(), "--tol=-1"]);
    assert_eq!(code, 2);
    assert!(out.contains("FAIL"));
}

#[test]
fn measures_lines() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "k.yaml", "{base: clayton, theta: -0.7}\n");
    let (code, out, _) = rmm(&[
        "measures",
        "--spec",
        spec.to_str().unwrap(),
        "--kind",
        "tau",
    ]);
    assert_eq!(code, 0);
    let fields: Vec<&str> = out.trim().split(',').collect();
    assert_eq!(fields[0], "tau");
    assert!((fields[1].parse::<f64>().unwrap() + 0.5385).abs() < 1e-3);
    assert_eq!(fields[3], "finite-difference");
    let (_, out, _) = rmm(&["measures", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.lines().count(), 4);
}

#[test]
fn table_csv_layout() {
    let (code, out, _) = rmm(&[
        "table", "rho", "--bases", "pi", "--a", "0.5", "--b", "0.5", "--n", "0,1,inf",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "base,a,b,n,kind,value,error");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("pi,0.5,0.5,0,rho,0.0000,"));
    let cell: Vec<&str> = lines[2].split(',').collect();
    assert!((cell[5].parse::<f64>().unwrap() + 0.2952).abs() <= 0.005);
    assert!(lines[3].starts_with("pi,0.5,0.5,inf,rho,"));
    assert_eq!(rmm(&["table", "lambda_l"]).0, 1);
}

#[test]
fn sample_is_deterministic_and_writes_meta() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "s.yaml",
        "{transform: rmm, base: pi, f: {power, a:0.5}, g: {power, a:0.5}}\n",
    );
    let paths: Vec<PathBuf> = (0..2)
        .map(|i| dir.path().join(format!("out{i}.csv")))
        .collect();
    for p in &paths {
        let (code, _, err) = rmm(&[
            "sample",
            "--spec",
            spec.to_str().unwrap(),
            "--n",
            "300",
            "--seed",
            "42",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    let a = fs::read(&paths[0]).unwrap();
    assert_eq!(a, fs::read(&paths[1]).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("u1,u2"));
    assert_eq!(text.lines().count(), 301);
    let meta = fs::read_to_string(paths[0].with_extension("meta")).unwrap();
    assert!(meta.contains("seed: 42") && meta.contains("n: 300") && meta.contains("power, a:0.5"));
}

#[test]
fn limit_diff_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "l.yaml",
        "{transform: rmm, base: pi, f: {power, a: 0.5}, g: {power, a: 0.5}}\n",
    );
    let (code, out, _) = rmm(&["limit-diff", "--spec", spec.to_str().unwrap(), "--n", "10"]);
    assert_eq!(code, 0);
    let d: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(d.len(), 11);
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
    let pi = write_spec(dir.path(), "pi.yaml", "pi\n");
    assert_eq!(rmm(&["limit-diff", "--spec", pi.to_str().unwrap()]).0, 1);
}

#[test]
fn documented_examples_parse_and_evaluate() {
    let mut seen = 0;
    for entry in fs::read_dir(examples_dir()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let doc = parse_spec(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let dim = doc.model.dim();
        let mid = doc.model.at(&vec![0.5; dim]);
        assert!((0.0..=0.5).contains(&mid), "{}: {mid}", path.display());
        assert_eq!(doc.model.at(&vec![1.0; dim]), 1.0, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 8);
}
