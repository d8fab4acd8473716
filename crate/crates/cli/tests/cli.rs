use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cbandit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbandit"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CBANDIT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn zero_samples_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbandit(&["simulate", "--preset", "appendix-e", "--do", "X2=1", "--samples", "0"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("samples"));
}

#[test]
fn simulate_reports_the_exact_reward() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbandit(&["simulate", "--preset", "appendix-e", "--do", "X2=1,X3=1", "--samples", "10", "--out", "s.csv"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("expected_y = 0.678"));
    assert_eq!(fs::read_to_string(dir.path().join("s.csv")).unwrap().lines().count(), 11);
}

#[test]
fn unknown_flags_and_subcommands_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!cbandit(&["bogus"], dir.path()).status.success());
    assert!(!cbandit(&["simulate", "--preset", "appendix-e", "--frobnicate"], dir.path()).status.success());
    assert!(!cbandit(&["simulate", "--do", "X2=1"], dir.path()).status.success());
    assert!(!cbandit(&["simulate", "--preset", "appendix-e", "--do", "Y=1"], dir.path()).status.success());
}

#[test]
fn regret_writes_aggregate_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbandit(
        &["regret", "--preset", "appendix-e", "--algo", "blm-lr-unknown", "--T", "1500", "--runs", "3", "--seed", "7", "--out", "d/"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let agg = fs::read_to_string(dir.path().join("d/aggregate.csv")).unwrap();
    assert_eq!(agg.lines().next().unwrap(), "T,algorithm,mean_cum_regret,stderr");
    assert_eq!(agg.lines().count(), 2);
    assert!(dir.path().join("d/traces/blm-lr-unknown_T1500.csv").exists());
    let config = fs::read_to_string(dir.path().join("d/config.toml")).unwrap();
    assert!(config.contains("seed = 7"));
    assert!(config.contains("rho_scale = 0.1"));
}

#[test]
fn out_dir_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cbandit"))
        .args(["regret", "--preset", "appendix-e", "--algo", "ucb", "--T", "200", "--runs", "1", "--out", "ignored"])
        .current_dir(dir.path())
        .env("CBANDIT_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from-env/aggregate.csv").exists());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn plot_draws_one_polyline_per_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbandit(
        &["regret", "--preset", "appendix-e", "--algo", "ucb,epsilon-greedy", "--T", "200,400", "--runs", "2", "--out", "d"],
        dir.path(),
    );
    assert!(o.status.success());
    let o = cbandit(&["plot", "--in", "d/aggregate.csv", "--out", "regret.svg"], dir.path());
    assert!(o.status.success());
    let svg = fs::read_to_string(dir.path().join("regret.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    let again = cbandit(&["plot", "--in", "d/aggregate.csv", "--out", "regret2.svg"], dir.path());
    assert!(again.status.success());
    assert_eq!(svg, fs::read_to_string(dir.path().join("regret2.svg")).unwrap());
    fs::write(dir.path().join("empty.csv"), "T,algorithm,mean_cum_regret,stderr\n").unwrap();
    assert!(!cbandit(&["plot", "--in", "empty.csv", "--out", "e.svg"], dir.path()).status.success());
}

#[test]
fn regret_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.toml"),
        "preset = \"appendix-e-small\"\nalgorithms = [\"ucb\"]\nhorizons = [300]\nruns = 2\nout_dir = \"cfg-out\"\n",
    )
    .unwrap();
    let o = cbandit(&["regret", "--config", "exp.toml"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("cfg-out/runs.csv").exists());
    fs::write(dir.path().join("bad.toml"), "preset = \"appendix-e\"\nruns = 0\n").unwrap();
    assert!(!cbandit(&["regret", "--config", "bad.toml"], dir.path()).status.success());
}

#[test]
fn discover_round_trips_its_log() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["discover", "--preset", "appendix-e", "--T", "4000", "--scope", "target-only", "--seed", "3"];
    let mut a: Vec<&str> = common.to_vec();
    a.extend(["--write-log", "log.csv", "--out", "rel1.txt"]);
    assert!(cbandit(&a, dir.path()).status.success());
    let mut b: Vec<&str> = common.to_vec();
    b.extend(["--log", "log.csv", "--out", "rel2.txt"]);
    assert!(cbandit(&b, dir.path()).status.success());
    let rel = fs::read_to_string(dir.path().join("rel1.txt")).unwrap();
    assert_eq!(rel, fs::read_to_string(dir.path().join("rel2.txt")).unwrap());
    assert!(rel.lines().last().unwrap().starts_with("Y: X1"));
}

#[test]
fn pure_explore_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbandit(&["pure-explore", "--preset", "appendix-e", "--eps", "0.2", "--delta", "0.1", "--trace", "pe.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("certified = true"));
    assert!(out.contains("arm,action,lower,upper"));
    assert!(fs::read_to_string(dir.path().join("pe.csv")).unwrap().starts_with("t,a_h,a_l"));
    let capped = cbandit(&["pure-explore", "--preset", "appendix-e", "--cap", "10", "--baseline"], dir.path());
    assert!(stdout(&capped).contains("certified = false"));
}
