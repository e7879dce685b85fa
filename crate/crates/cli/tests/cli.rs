use std::process::{Command, Output};

use serde_json::Value;

fn strahler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strahler"))
        .args(args)
        .env_remove("STRAHLER_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = strahler(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Rows of a CSV table as column-name lookups, skipping the comment header.
fn rows(csv: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("# strahler schema=1 command="));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn field<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter()
        .find(|(k, _)| k == name)
        .unwrap_or_else(|| panic!("no column {name}"))
        .1
}

fn num(row: &[(String, String)], name: &str) -> f64 {
    field(row, name).parse().unwrap()
}

#[test]
fn enumerate_three_leaves() {
    let out = stdout_ok(&["enumerate", "--n", "3"]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(field(row, "profile"), "3;1");
        assert_eq!(field(row, "leaves"), "3");
    }
}

#[test]
fn enumerate_stats_four_leaves() {
    let out = stdout_ok(&["enumerate", "--n", "4", "--stats"]);
    let hit = rows(&out)
        .into_iter()
        .find(|r| field(r, "r") == "2" && field(r, "k") == "2")
        .unwrap();
    assert!((num(&hit, "prob") - 0.2).abs() < 1e-15);
}

#[test]
fn pmf_modes_agree() {
    let a = rows(&stdout_ok(&[
        "pmf", "--r", "2", "--n", "20", "--mode", "rational",
    ]));
    let b = rows(&stdout_ok(&["pmf", "--r", "2", "--n", "20"]));
    assert_eq!(a.len(), b.len());
    let total: f64 = a.iter().map(|r| num(r, "prob")).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for (x, y) in a.iter().zip(&b) {
        assert!((num(x, "prob") - num(y, "prob")).abs() < 1e-13);
    }
}

#[test]
fn mgf_three_leaves() {
    let out = stdout_ok(&["mgf", "--r", "2", "--n", "3", "--xi", "1"]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 1);
    assert!((num(&rows[0], "log_mgf") - 1.0).abs() < 1e-15);
}

#[test]
fn phi_derivative_at_origin() {
    let rows = rows(&stdout_ok(&["phi", "--r", "3", "--xi", "0"]));
    assert!((num(&rows[0], "dphi") - 1.0 / 64.0).abs() < 1e-15);
    assert_eq!(num(&rows[0], "phi"), 0.0);
}

#[test]
fn negative_xi_values_parse() {
    let rows = rows(&stdout_ok(&["phi", "--r", "1", "--xi", "-3,-1.5,2"]));
    assert_eq!(rows.len(), 3);
    assert_eq!(num(&rows[0], "xi"), -3.0);
}

#[test]
fn rate_curve_minimum() {
    let rows = rows(&stdout_ok(&["rate", "--r", "2"]));
    assert_eq!(rows.len(), 201);
    let best = rows
        .iter()
        .min_by(|a, b| num(a, "rate").total_cmp(&num(b, "rate")))
        .unwrap();
    assert_eq!(num(best, "y"), 0.0625);
}

#[test]
fn ld_far_tail_is_censored() {
    let rows = rows(&stdout_ok(&[
        "ld", "--r", "1", "--n", "256", "--trials", "5000", "--y", "0.45",
    ]));
    assert_eq!(field(&rows[0], "censored"), "true");
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let args = [
        "ld", "--r", "1", "--n", "64", "--trials", "9000", "--y", "0.2,0.3", "--seed", "5",
    ];
    let base = stdout_ok(&args);
    assert_eq!(base, stdout_ok(&args));
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    assert_eq!(base, stdout_ok(&threaded));
    let out = Command::new(env!("CARGO_BIN_EXE_strahler"))
        .args(args)
        .env("STRAHLER_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(base.as_bytes(), &out.stdout[..]);

    let sample = [
        "sample", "--n", "50", "--count", "5", "--trees", "--seed", "7",
    ];
    assert_eq!(stdout_ok(&sample), stdout_ok(&sample));
    let mut other = sample.to_vec();
    other[7] = "8";
    assert_ne!(stdout_ok(&sample), stdout_ok(&other));
}

#[test]
fn json_output() {
    let out = stdout_ok(&[
        "pmf", "--r", "2", "--n", "4", "--mode", "rational", "--format", "json",
    ]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "pmf");
    assert_eq!(v["config"]["mode"], "rational");
    let row = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["k"] == 2)
        .unwrap();
    assert!((row["prob"].as_f64().unwrap() - 0.2).abs() < 1e-15);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.csv");
    let args = ["phi", "--r", "2", "--xi-points", "5"];
    let mut with_file = args.to_vec();
    with_file.extend(["--output", path.to_str().unwrap()]);
    assert!(stdout_ok(&with_file).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout_ok(&args));
}

#[test]
fn bad_input_exits_nonzero() {
    let unknown = strahler(&["rate", "--r", "2", "--bogus"]);
    assert_eq!(unknown.status.code(), Some(2));
    let domain = strahler(&["rate", "--r", "2", "--grid", "0.3"]);
    assert_eq!(domain.status.code(), Some(2));
    assert!(!domain.stderr.is_empty() && domain.stdout.is_empty());
    let cap = strahler(&["pmf", "--r", "2", "--n", "65", "--mode", "rational"]);
    assert_eq!(cap.status.code(), Some(2));
    let no_y = strahler(&["ld", "--r", "1", "--n", "64", "--trials", "10"]);
    assert_ne!(no_y.status.code(), Some(0));
}

#[test]
fn verify_suites_pass_and_repeat() {
    for suite in ["exact", "rate"] {
        let out = stdout_ok(&["verify", "--suite", suite]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["passed"], true, "{suite}: {out}");
    }
    let args = ["verify", "--suite", "mc", "--seed", "42", "--quick"];
    let first = stdout_ok(&args);
    assert_eq!(first, stdout_ok(&args));
    let csv = stdout_ok(&["verify", "--suite", "phi", "--format", "csv"]);
    assert!(rows(&csv).iter().all(|r| field(r, "pass") == "true"));
}

#[test]
fn small_exact_tables() {
    assert_eq!(rows(&stdout_ok(&["enumerate", "--n", "2"])).len(), 1);
    let four = rows(&stdout_ok(&["pmf", "--r", "2", "--n", "4"]));
    assert_eq!(four.len(), 2);
    assert!((four.iter().map(|r| num(r, "prob")).sum::<f64>() - 1.0).abs() < 1e-15);
    let trivial = rows(&stdout_ok(&["pmf", "--r", "1", "--n", "5"]));
    assert_eq!(trivial.len(), 1);
    assert_eq!(
        (num(&trivial[0], "k"), num(&trivial[0], "prob")),
        (5.0, 1.0)
    );
    let phi = rows(&stdout_ok(&["phi", "--r", "3", "--xi", "0"]));
    assert!((num(&phi[0], "ddphi") - 63.0 / 12288.0).abs() < 1e-17);
}

#[test]
fn rate_r1_matches_closed_form() {
    for row in rows(&stdout_ok(&["rate", "--r", "1", "--points", "101"])) {
        let closed = field(&row, "rate_closed_r1");
        if !closed.is_empty() {
            let c: f64 = closed.parse().unwrap();
            assert!(
                (num(&row, "rate") - c).abs() < 1e-12,
                "y = {}",
                field(&row, "y")
            );
        }
    }
}
