//! End-to-end checks of the `solver` binary.

use std::path::Path;
use std::process::{Command, Output};

fn solver(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solver"))
        .args(args)
        .current_dir(dir)
        .env("SOLVER_THREADS", "1")
        .output()
        .expect("solver runs")
}

const SMALL: &str = r#"
name = "small"
seed = 4
n_eval = 60

[problem]
id = "cubic"

[kernel]
family = "mq"
scale = 0.3

[pointset]
kind = "grid"
n = 8

[solver]
method = "trust_region"
trs = "dogleg"

[output]
csv = "small.csv"
trace = "small.jsonl"
"#;

fn without_time(csv: &str) -> String {
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let t = headers.iter().position(|h| h == "wall_time_s").unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            r.iter()
                .enumerate()
                .filter(|(i, _)| *i != t)
                .map(|(_, f)| f.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn run_writes_csv_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = solver(&["run", "--config", "small.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("small.csv")).unwrap();
    assert_eq!(csv, String::from_utf8(out.stdout).unwrap());
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let h = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let get = |k: &str| row.get(h.iter().position(|x| x == k).unwrap()).unwrap().to_string();
    assert_eq!(get("status"), "converged");
    assert_eq!(get("N"), "64");
    assert!(get("mu_final").parse::<f64>().unwrap() < 1e-20);
    let trace = std::fs::read_to_string(dir.path().join("small.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), get("iterations").parse::<usize>().unwrap());
    for key in ["k", "mu", "delta", "rho", "step_kind", "step_norm", "accepted"] {
        assert!(lines[0].get(key).is_some(), "trace lacks {key}");
    }
}

#[test]
fn reruns_are_identical_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let a = solver(&["run", "--config", "small.toml"], dir.path());
    let ta = std::fs::read(dir.path().join("small.jsonl")).unwrap();
    let b = solver(&["run", "--config", "small.toml"], dir.path());
    let tb = std::fs::read(dir.path().join("small.jsonl")).unwrap();
    assert_eq!(ta, tb);
    assert_eq!(
        without_time(&String::from_utf8(a.stdout).unwrap()),
        without_time(&String::from_utf8(b.stdout).unwrap())
    );
}

#[test]
fn single_evaluation_point_is_fine() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("one.toml"), SMALL.replace("n_eval = 60", "n_eval = 1")).unwrap();
    let out = solver(&["run", "--config", "one.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("missing.toml", None),
        ("syntax.toml", Some("this is not toml [")),
        ("unknown.toml", Some(&*SMALL.replace("n_eval = 60", "n_eval = 60\nbogus = 1"))),
        ("shape.toml", Some(&*SMALL.replace("scale = 0.3", "scale = -1.0"))),
        ("neval.toml", Some(&*SMALL.replace("n_eval = 60", "n_eval = 0"))),
        ("plateau.toml", Some(&*SMALL.replace("id = \"cubic\"", "id = \"plateau\"\ns = 2.0"))),
    ];
    for (name, text) in cases {
        if let Some(t) = text {
            std::fs::write(dir.path().join(name), t).unwrap();
        }
        let out = solver(&["run", "--config", name], dir.path());
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = solver(&["validate", "--problem", "nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = solver(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("trs = \"dogleg\"", "trs = \"dogleg\"\nmax_iter = 1");
    std::fs::write(dir.path().join("short.toml"), text).unwrap();
    let out = solver(&["run", "--config", "short.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    // The row is still printed.
    assert!(String::from_utf8(out.stdout).unwrap().contains("maxiter"));
}

#[test]
fn validate_passes_for_catalog_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = solver(&["validate", "--problem", "cubic"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
}

#[test]
fn sweep_keeps_input_order_and_isolates_errors() {
    let dir = tempfile::tempdir().unwrap();
    let body = |name: &str, n: usize, c: f64| {
        format!(
            "[[run]]\nname = \"{name}\"\nn_eval = 30\n[run.problem]\nid = \"cubic\"\n[run.kernel]\nfamily = \"mq\"\nscale = {c}\n[run.pointset]\nkind = \"grid\"\nn = {n}\n"
        )
    };
    let text = format!(
        "{}{}{}[[run]]\nname = \"broken\"\n[run.problem]\nid = \"cubic\"\n[run.kernel]\nfamily = \"mq\"\nscale = 0.3\n[run.pointset]\nkind = \"file\"\npath = \"nowhere.txt\"\n",
        body("b", 7, 0.3),
        body("a", 6, 0.3),
        body("c", 8, 0.25)
    );
    std::fs::write(dir.path().join("sweep.toml"), text).unwrap();
    let out = solver(&["sweep", "--config", "sweep.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let csv = String::from_utf8(out.stdout).unwrap();
    let names: Vec<String> = csv::Reader::from_reader(csv.as_bytes())
        .records()
        .map(|r| r.unwrap()[0].to_string())
        .collect();
    assert_eq!(names, ["b", "a", "c", "broken"]);
    assert!(csv.lines().last().unwrap().contains("error"));

    std::fs::write(dir.path().join("empty.toml"), "").unwrap();
    let out = solver(&["sweep", "--config", "empty.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("name,"));
}
