use std::process::Command;

fn christoffel(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_christoffel")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn eval_disc_degree_one() {
    let (code, out, _) = christoffel(&["eval", "--body", "disc", "--n", "1", "--point", "0,0"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!((v["lambda"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(v["basis_size"], 3);
}

#[test]
fn eval_csv_row_and_preset_point() {
    let (code, out, _) = christoffel(&["eval", "--body", "sharp2d:0.002,0.03,0.05", "--n", "6", "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].contains("1.998;0"));
}

#[test]
fn body_from_json_file_and_moment_dump() {
    let dir = tempfile::tempdir().unwrap();
    let body = dir.path().join("tri.json");
    std::fs::write(&body, r#"{"type":"polygon","vertices":[[0,0],[1,0],[0,1]]}"#).unwrap();
    let moments = dir.path().join("m.csv");
    let (code, out, err) = christoffel(&[
        "eval",
        "--body-file",
        body.to_str().unwrap(),
        "--n",
        "2",
        "--point",
        "0.2,0.2",
        "--dump-moments",
        moments.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(json(&out)["lambda"].as_f64().unwrap() > 0.0);
    // Header plus C(4 + 2, 2) moments.
    assert_eq!(std::fs::read_to_string(moments).unwrap().lines().count(), 16);
}

#[test]
fn measure_bound_certify() {
    let (code, out, _) = christoffel(&["measure", "--body", "square", "--point", "0.9,0.2"]);
    assert_eq!(code, 0);
    let m = json(&out);
    assert!((m["delta"].as_f64().unwrap() - 0.1).abs() < 1e-9);
    assert!((m["l1"].as_f64().unwrap() - 1.2).abs() < 1e-9);

    let (code, out, _) = christoffel(&["bound", "--body", "disc", "--point", "0.9,0", "--n", "8", "--sigma", "0.1"]);
    assert_eq!(code, 0);
    let rhs = json(&out)["rhs"].as_f64().unwrap();
    assert!(rhs > 0.0 && rhs < 0.01);

    let (code, out, _) = christoffel(&["certify", "--body", "disc", "--point", "0.9,0", "--n", "8"]);
    assert_eq!(code, 0);
    let c = json(&out);
    assert!((c["certificate"]["value_at_x"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    // delta = 0.01 < sigma / n^2 = 1/16 is an invariant violation.
    let (code, _, err) = christoffel(&["bound", "--body", "disc", "--point", "0.99,0", "--n", "4"]);
    assert_eq!(code, 2, "{err}");
    let (code, _, _) = christoffel(&["experiment", "no-such-experiment"]);
    assert_eq!(code, 1);
    let (code, _, _) = christoffel(&["eval", "--body", "disc", "--n", "2", "--point", "2,0"]);
    assert_eq!(code, 0);
}

#[test]
fn experiment_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let (code, out, err) = christoffel(&[
        "experiment",
        "lp-exponent",
        "--param",
        "n=6",
        "--param",
        "alphas=1.5,2",
        "--param",
        "deltas=0.05,0.1,0.2",
        "--out",
        out_dir,
        "--format",
        "csv",
        "--format",
        "json",
        "--format",
        "svg",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 4);
    let csv = std::fs::read_to_string(dir.path().join("lp-exponent.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(dir.path().join("lp-exponent_alpha_1.5.svg").exists());
    let (code, _, _) = christoffel(&["experiment", "disc-center", "--param", "ns=99", "--out", out_dir]);
    assert_eq!(code, 1);
}
