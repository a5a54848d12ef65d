use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TINY: &str = "instance_id,heuristic_id,sample_index,time,censored\n\
a,h1,0,3,0\na,h2,0,9,1\nb,h1,0,9,1\nb,h2,0,2,0\nc,h1,0,5,0\nc,h2,0,4,0\n";

fn portfolio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_portfolio"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = portfolio(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn spec() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/two-cluster.toml")
        .to_string_lossy()
        .into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p: PathBuf = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn synth_is_seeded() {
    let a = stdout(&["synth", "--spec", &spec(), "--seed", "1"]);
    assert_eq!(a, stdout(&["synth", "--spec", &spec(), "--seed", "1"]));
    assert_ne!(a, stdout(&["synth", "--spec", &spec(), "--seed", "2"]));
    assert!(a.starts_with("# limit: 64\n"));
}

#[test]
fn oracle_finds_the_best_order() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "tiny.csv", TINY);
    let out = stdout(&["oracle", "--data", &data]);
    // h2 for 4 catches b and c, then h1 for 3 catches a: 2 + 4 + 7
    assert!(out.ends_with("# total_cost: 13.000000000\n"), "{out}");
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(rows.last().unwrap().contains(",h1,3,"), "{out}");
}

#[test]
fn greedy_prints_densities_and_saves_a_reloadable_schedule() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "tiny.csv", TINY);
    let sched = dir.path().join("s.csv").to_string_lossy().into_owned();
    let out = stdout(&["greedy", "--data", &data, "--save-schedule", &sched]);
    assert!(out.starts_with("step,heuristic,tau,density\n"));
    let eval = stdout(&["eval", "--data", &data, "--schedule", &sched]);
    assert!(eval.starts_with("instance_id,weight,expected_capped_time\n"));
    assert!(eval.contains("# total: "));
    assert_eq!(eval.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn restart_model_changes_the_answer() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "tiny.csv", TINY);
    let sr = stdout(&["oracle", "--data", &data]);
    let rs = stdout(&["oracle", "--data", &data, "--model", "restart"]);
    assert!(rs.contains(",restart\n"));
    assert_ne!(sr, rs);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "tiny.csv", TINY);
    let cfg = write(&dir, "run.toml", &format!("data = \"{data}\"\nmodel = \"restart\"\n"));
    let from_file = stdout(&["oracle", "--config", &cfg]);
    assert!(from_file.contains(",restart\n"));
    let flagged = stdout(&["oracle", "--config", &cfg, "--model", "sr"]);
    assert!(flagged.ends_with("# total_cost: 13.000000000\n"));
}

#[test]
fn input_problems_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.csv").to_string_lossy().into_owned();
    let out = portfolio(&["greedy", "--data", &missing]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));

    let bad = write(&dir, "bad.csv", "instance_id,heuristic,time\n");
    assert_eq!(portfolio(&["greedy", "--data", &bad]).status.code(), Some(2));

    let data = write(&dir, "tiny.csv", TINY);
    assert_eq!(
        portfolio(&["greedy", "--data", &data, "--model", "lazy"]).status.code(),
        Some(2)
    );
    assert_eq!(portfolio(&["greedy"]).status.code(), Some(2));
    assert_eq!(portfolio(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(portfolio(&["--help"]).status.code(), Some(0));
}

#[test]
fn curve_summary_has_one_row_per_method_and_size() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("r.csv").to_string_lossy().into_owned();
    stdout(&["synth", "--spec", &spec(), "--out", &data]);
    let summary = dir.path().join("sum.csv");
    let rows = stdout(&[
        "curve",
        "--data",
        &data,
        "--reps",
        "3",
        "--m",
        "2,16",
        "--summary",
        &summary.to_string_lossy(),
    ]);
    assert_eq!(rows.lines().count(), 1 + 3 * 2 * 3);
    let text = std::fs::read_to_string(summary).unwrap();
    assert_eq!(text.lines().next(), Some("method,m,mean_avg_capped_time,repetitions"));
    assert_eq!(text.lines().count(), 1 + 3 * 2);
}
