//! End-to-end runs of the `mrf-relax` binary.

use std::path::Path;
use std::process::{Command, Output};

use mrf_relax::generate::{gen_grid, Connectivity, PairwisePotential};
use mrf_relax::io::{read_run_record, serialize_native};
use mrf_relax::oracle::{brute_force_map, DEFAULT_ORACLE_CAP};

const UAI: &str = "MARKOV\n2\n2 2\n3\n1 0\n1 1\n2 0 1\n\n2\n1.0 2.0\n\n2\n1.0 1.0\n\n4\n1.0 0.5 0.5 1.0\n";

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrf-relax"))
        .args(args)
        .current_dir(cwd)
        .env("MAP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_grid(dir: &Path) -> std::path::PathBuf {
    let model = gen_grid(3, 3, 2, Connectivity::N4, PairwisePotential::Random, 4).unwrap();
    let path = dir.join("grid.mrf");
    std::fs::write(&path, serialize_native(&model)).unwrap();
    path
}

#[test]
fn solve_prints_energy_and_writes_record() {
    let dir = tempfile::tempdir().unwrap();
    write_grid(dir.path());
    let o = run(
        &[
            "solve", "--model", "grid.mrf", "--solver", "bcd", "--seed", "3", "--inits", "2",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1);
    let energy: f64 = lines[0].strip_prefix("energy ").unwrap().parse().unwrap();
    let record = read_run_record(dir.path().join("grid__bcd__s3.json")).unwrap();
    assert_eq!(record.report.discrete_energy, energy);
    assert_eq!((record.seed, record.inits), (3, 2));
}

#[test]
fn solve_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    write_grid(dir.path());
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json"] {
        let o = run(
            &[
                "solve",
                "--model",
                "grid.mrf",
                "--solver",
                "admm",
                "--max-iters",
                "500",
                "--out",
                name,
            ],
            dir.path(),
        );
        assert!(o.status.success());
        outputs.push(read_run_record(dir.path().join(name)).unwrap());
    }
    assert!(outputs[0].same_outcome(&outputs[1]));
}

#[test]
fn usage_and_run_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_grid(dir.path());
    assert_eq!(
        run(&["solve", "--model", "grid.mrf", "--solver", "icm"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(
        run(&["solve", "--model", "missing.mrf", "--solver", "fw"], dir.path())
            .status
            .code(),
        Some(2)
    );
    std::fs::write(dir.path().join("bad.uai"), "MARKOV\n1\n2\n1\n1 0\n2\n1.0 -1.0\n").unwrap();
    let o = run(&["check", "--model", "bad.uai"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn oracle_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_grid(dir.path());
    let o = run(&["oracle", "--model", "grid.mrf"], dir.path());
    assert!(o.status.success());
    let model = mrf_relax::io::load_model(&path).unwrap();
    let (labeling, energy) = brute_force_map(&model, DEFAULT_ORACLE_CAP).unwrap();
    let labels: Vec<String> = labeling.labels().iter().map(usize::to_string).collect();
    assert_eq!(stdout(&o), format!("energy {energy}\nlabeling {}\n", labels.join(" ")));
    assert_eq!(
        run(&["oracle", "--model", "grid.mrf", "--cap", "10"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn check_reports_uai_structure() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pair.uai"), UAI).unwrap();
    let o = run(&["check", "--model", "pair.uai"], dir.path());
    assert_eq!(stdout(&o), "ok: 2 nodes, 3 cliques, degree 2\n");
    let o = run(&["oracle", "--model", "pair.uai"], dir.path());
    // -ln of (1, 2) x (1, 1) x [[1, .5], [.5, 1]]: labels (1, 1) give -ln 2.
    assert_eq!(stdout(&o), format!("energy {}\nlabeling 1 1\n", -(2f64.ln())));
}

#[test]
fn bench_suite_writes_summaries() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pair.uai"), UAI).unwrap();
    let suite = r#"{
        "instances": [
            {"kind": "grid", "rows": 2, "cols": 3, "labels": 2, "connectivity": "n8", "potential": {"type": "potts", "lambda": 0.5}, "seed": 1, "count": 2},
            {"kind": "file", "path": "pair.uai"}
        ],
        "solvers": ["bcd", "fw"],
        "config": {"max_iters": 200}
    }"#;
    std::fs::write(dir.path().join("suite.json"), suite).unwrap();
    let o = run(&["bench", "--suite", "suite.json", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    assert!(out.join("summary.json").is_file());
    assert_eq!(std::fs::read_to_string(out.join("summary.txt")).unwrap(), stdout(&o));
    assert_eq!(std::fs::read_dir(out.join("records")).unwrap().count(), 6);
    assert_eq!(run(&["bench"], dir.path()).status.code(), Some(1));
}

#[test]
fn acceptance_subcommand_prints_selected_lines() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bench", "run-acceptance", "--only", "4,9"], dir.path());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines[0].starts_with("criterion  4 PASS"));
    assert!(lines[1].starts_with("criterion  9 PASS"));
    assert!(o.status.success());
}
