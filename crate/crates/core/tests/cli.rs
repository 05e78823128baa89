use std::process::{Command, Output};

use serde_json::Value;

fn lucas_rank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lucas-rank"))
        .env_remove("LUCAS_RANK_WORKERS")
        .args(args)
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = lucas_rank(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_fibonacci() {
    let v = json(&["analyze", "--a1", "1", "--a2", "1"]);
    assert_eq!(v["schema_version"], "1");
    assert_eq!(v["command"], "analyze");
    assert_eq!(v["results"]["delta"], "5");
    assert_eq!(v["results"]["h"], "1");
    assert_eq!(v["results"]["excluded_primes"], serde_json::json!(["2", "5"]));
    assert_eq!(v["timing"]["included"], false);
}

#[test]
fn analyze_negative_coefficient() {
    let v = json(&["analyze", "--a1", "3", "--a2", "-1"]);
    assert_eq!(v["results"]["delta"], "5");
    assert_eq!(v["results"]["h"], "4");
}

#[test]
fn rank_single_and_range() {
    let v = json(&["rank", "--a1", "1", "--a2", "1", "--p", "29"]);
    let rec = &v["results"]["records"][0];
    assert_eq!((rec["m"].as_str(), rec["rho"].as_str(), rec["iota"].as_str()), (Some("28"), Some("14"), Some("2")));

    let v = json(&["rank", "--a1", "1", "--a2", "1", "--from", "2", "--to", "13"]);
    let recs = v["results"]["records"].as_array().unwrap();
    let ps: Vec<_> = recs.iter().map(|r| r["p"].as_str().unwrap()).collect();
    assert_eq!(ps, ["2", "3", "5", "7", "11", "13"]);
    assert_eq!(recs[0]["status"], "excluded");
    assert_eq!(recs[2]["status"], "excluded");
    assert_eq!(recs[3]["rho"], "8");
}

#[test]
fn rank_rejects_composite() {
    let out = lucas_rank(&["rank", "--a1", "1", "--a2", "1", "--p", "21"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn density_values() {
    let v = json(&["density", "--a1", "1", "--a2", "1", "--d", "3"]);
    assert_eq!(v["results"]["delta"], "3/8");
    assert_eq!(v["results"]["eta"], "0/1");
    let v = json(&["density", "--a1", "1", "--a2", "-2", "--d", "7"]);
    assert_eq!(v["results"]["delta"], "7/24");
    assert_eq!(v["results"]["eta"], "1/1");
    assert_eq!(v["results"]["branch"], "eta_nonzero");
}

#[test]
fn census_counts_and_csv() {
    let v = json(&["census", "--a1", "1", "--a2", "1", "--d", "3", "--x", "100"]);
    assert_eq!(v["results"]["count"], "8");
    let out = lucas_rank(&[
        "--format", "csv", "census", "--a1", "1", "--a2", "1", "--d", "3", "--x", "1e4", "--checkpoints-at", "1000,10^4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,count,li_x,pi_x,ratio_li,ratio_pi,delta_predicted,error"));
    assert_eq!(lines.clone().count(), 2);
    assert!(lines.next().unwrap().starts_with("1000,"));
}

#[test]
fn census_json_is_stable_across_workers() {
    let args = |w: &'static str| {
        vec!["--format", "json", "census", "--a1", "4", "--a2", "1", "--d", "3", "--x", "200000", "--segment-size", "4096", "--workers", w]
    };
    let a = lucas_rank(&args("1"));
    let b = lucas_rank(&args("8"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn census_workers_from_env() {
    let out = Command::new(env!("CARGO_BIN_EXE_lucas-rank"))
        .env("LUCAS_RANK_WORKERS", "3")
        .args(["census", "--a1", "1", "--a2", "1", "--d", "3", "--x", "1000"])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn census_halt_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("ck.json");
    let ck = ck.to_str().unwrap();
    let base = ["--format", "json", "census", "--a1", "1", "--a2", "1", "--d", "5", "--x", "300000", "--segment-size", "8192"];
    let full = json(&base[2..]);

    let mut halted: Vec<&str> = base.to_vec();
    halted.extend(["--checkpoint", ck, "--halt-after", "10"]);
    let out = lucas_rank(&halted);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["halted"], true);

    let mut resumed: Vec<&str> = base.to_vec();
    resumed.extend(["--checkpoint", ck, "--resume"]);
    let out = lucas_rank(&resumed);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"], full["results"]);
}

#[test]
fn checkpoint_from_other_run_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("ck.json");
    let ck = ck.to_str().unwrap();
    let out = lucas_rank(&["census", "--a1", "1", "--a2", "1", "--d", "3", "--x", "100000", "--segment-size", "4096", "--checkpoint", ck, "--halt-after", "2"]);
    assert!(out.status.success());
    let out = lucas_rank(&["census", "--a1", "1", "--a2", "1", "--d", "5", "--x", "100000", "--segment-size", "4096", "--checkpoint", ck, "--resume"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_modes() {
    let v = json(&["verify", "--a1", "1", "--a2", "1", "--d", "3", "--x", "5000"]);
    assert_eq!(v["results"]["verdicts"][0]["verdict"], "exact-match");
    let v = json(&["verify", "--a1", "1", "--a2", "-2", "--d", "5", "--mode", "innersum"]);
    let verdicts = v["results"]["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 3);
    assert!(verdicts.iter().all(|r| r["verdict"] == "exact-match"));
    let v = json(&["verify", "--a1", "4", "--a2", "1", "--d", "3", "--mode", "series"]);
    assert_eq!(v["results"]["verdict"], "within-tolerance");
}

#[test]
fn report_table() {
    let v = json(&["report", "--a1", "1", "--a2", "1", "--d", "3", "--checkpoints-at", "100,1000"]);
    let rows = v["results"]["convergence"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["x"], "100");
    assert_eq!(rows[0]["count"], "8");
    assert_eq!(rows[1]["delta_predicted"], "3/8");
}

#[test]
fn hypothesis_errors_in_json() {
    let out = lucas_rank(&["--format", "json", "analyze", "--a1", "2", "--a2", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["exit_code"], 2);
    assert!(v["error"].as_str().unwrap().contains("square discriminant"));
}

#[test]
fn timing_is_opt_in() {
    let v = json(&["--timing", "density", "--a1", "1", "--a2", "1", "--d", "3"]);
    assert_eq!(v["timing"]["included"], true);
    assert!(v["timing"]["elapsed_ms"].is_string());
}
