//! Black-box tests of the `algact` binary: exit codes, report schema,
//! file inputs, CSV projection, and byte-identical reruns.

use std::process::{Command, Output};

fn algact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_algact"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn fourier_check_passes_and_reports_schema() {
    let out = algact(&[
        "fourier-check",
        "--xi", "1/2",
        "--group", "Z^1",
        "--nu", "uniformint(1)",
        "--alpha", "1",
        "--samples", "20000",
        "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["tool"]["name"], "algact");
    assert_eq!(v["subcommand"], "fourier-check");
    assert_eq!(v["seed"], 7);
    assert_eq!(v["status"], "pass");
    let payload = &v["payload"];
    for key in ["empirical", "stderr", "analytic", "tail_bound", "pass"] {
        assert!(payload.get(key).is_some(), "missing payload key {key}");
    }
    assert!((payload["analytic"][0].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(payload["pass"], true);
    // Config echo keeps the invocation reproducible.
    assert_eq!(v["config"]["nu"], "uniformint(1)");
}

#[test]
fn malformed_expression_exits_one_with_caret() {
    let out = algact(&[
        "fourier-check",
        "--xi", "2 -- u1",
        "--group", "Z^1",
        "--nu", "uniformint(1)",
        "--alpha", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("parse error at byte 3"), "stderr: {stderr}");
    assert!(stderr.contains("2 -- u1"), "stderr: {stderr}");
    assert!(stderr.lines().any(|l| l.trim_end().ends_with('^')), "stderr: {stderr}");
}

#[test]
fn unknown_flags_and_subcommands_exit_one() {
    assert_eq!(algact(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(algact(&[]).status.code(), Some(1));
    assert_eq!(
        algact(&["haar-join", "--group", "S3", "--y1", "(12)"]).status.code(),
        Some(1),
        "missing --y2 is a usage error"
    );
}

#[test]
fn inconclusive_ideal_test_exits_three() {
    let out = algact(&[
        "ideal-test",
        "--f", "1 - u1",
        "--group", "Z^1",
        "--alpha", "1",
        "--k", "2,4,8",
        "--grid", "512",
        "--window", "128",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v = json_of(&out);
    assert_eq!(v["status"], "inconclusive");
    assert_eq!(v["payload"]["classification"], "Inconclusive");
}

#[test]
fn ideal_test_classifies_and_exits_zero() {
    let out = algact(&[
        "ideal-test",
        "--f", "2 - u1",
        "--group", "Z^1",
        "--alpha", "2 - u1",
        "--k", "2,4,...,64",
        "--grid", "1024",
        "--window", "256",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["payload"]["classification"], "InIntegerIdeal");
    // Ellipsis expansion: 2,4,8,16,32,64.
    assert_eq!(v["payload"]["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn no_witness_error_exits_two() {
    let out = algact(&["nonextend", "--nu", "dirac", "--p", "3", "--terms", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no witness"), "stderr: {stderr}");
}

#[test]
fn nonextend_passes_for_uniform() {
    let out = algact(&["nonextend", "--nu", "uniformint(1)", "--p", "3", "--terms", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let rows = v["payload"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows[9]["divergent_partial"].as_f64().unwrap() > 9.0);
    assert!(rows[9]["lp_partial"].as_f64().unwrap() <= 2.0);
}

#[test]
fn group_json_file_input() {
    let dir = std::env::temp_dir().join(format!("algact-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("z4.json");
    std::fs::write(
        &path,
        r#"{"order":4,"table":[0,1,2,3,1,2,3,0,2,3,0,1,3,0,1,2]}"#,
    )
    .unwrap();
    let group_arg = format!("@{}", path.display());
    let out = algact(&[
        "haar-join",
        "--group", &group_arg,
        "--y1", "2",
        "--y2", "0",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["payload"]["join"], serde_json::json!(["0", "2"]));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn matrix_file_and_alphas_file() {
    let dir = std::env::temp_dir().join(format!("algact-mat-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mat = dir.join("xi.json");
    std::fs::write(&mat, r#"{"group":"Z^1","entries":[["1/2","0"],["0","1/2"]]}"#).unwrap();
    let alphas = dir.join("alphas.txt");
    std::fs::write(&alphas, "1; 0\n0; u1\n").unwrap();
    let out = algact(&[
        "strong-witness",
        "--xi", &format!("@{}", mat.display()),
        "--group", "Z^1",
        "--n", "0,1,2,4",
        "--alphas", &format!("@{}", alphas.display()),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["payload"]["rows"].as_array().unwrap().len(), 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn csv_projection_and_out_file() {
    let dir = std::env::temp_dir().join(format!("algact-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.csv");
    let out = algact(&[
        "approx-inverse",
        "--f", "2 - u1",
        "--group", "Z^1",
        "--k", "2,4,8",
        "--grid", "512",
        "--window", "128",
        "--format", "csv",
        "--out", &path.display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# table: approx_inverse\n"));
    assert!(text.contains("k,residual_left,residual_right,op_norm_bound,xi_truncation_mass"));
    assert_eq!(text.lines().count(), 5);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn witness_reports_claims() {
    let out = algact(&[
        "witness",
        "--f", "2 - u1",
        "--group", "Z^1",
        "--alpha", "2 - u1",
        "--alpha", "1",
        "--k", "2,4,...,64",
        "--delta", "0.2,0.1",
        "--grid", "1024",
        "--window", "256",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let rows = v["payload"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["claim"], "claim1");
    assert_eq!(rows[1]["claim"], "claim2");
    assert_eq!(rows[0]["pass"], true);
    assert_eq!(rows[1]["pass"], true);
}

#[test]
fn witness_with_inconclusive_row_exits_three() {
    // Three cutoffs of a diverging trajectory classify as inconclusive.
    let out = algact(&[
        "witness",
        "--f", "1 - u1",
        "--group", "Z^1",
        "--alpha", "1",
        "--k", "2,4,8",
        "--delta", "0.1",
        "--grid", "512",
        "--window", "128",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["status"], "inconclusive");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "fourier-check",
        "--xi", "1/2 + 1/4*u1",
        "--group", "Z^1",
        "--nu", "geom2^1",
        "--alpha", "1 + u1",
        "--samples", "20000",
        "--seed", "99",
    ];
    let a = algact(&args);
    let b = algact(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
}

#[test]
fn maxmin_cli_on_shift_plane_predicate() {
    let out = algact(&[
        "maxmin",
        "--group", "(Z/2)^3",
        "--predicate", "supportin:000,001,010,011&invariant:shift",
        "--probes", "50",
        "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["payload"]["subgroup"], serde_json::json!(["000"]));
    assert_eq!(v["payload"]["closure_audit"], "ok");
}

#[test]
fn support_recovery_cli_matches_oracle() {
    let out = algact(&[
        "support-recovery",
        "--group", "Z/6",
        "--mu", "uniform:1,3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["payload"]["subgroup"], serde_json::json!(["0", "2", "4"]));
    assert_eq!(v["payload"]["matches_oracle"], true);
}
