use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_needlet-choice"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn inspect_prints_circle_eigenvalues() {
    let out = run(&["inspect", "--d", "2", "--kmax", "9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value = |k: &str| -> f64 {
        let line = text.lines().find(|l| l.split('\t').next() == Some(k) && l.split('\t').count() == 2).unwrap();
        line.split('\t').nth(1).unwrap().parse().unwrap()
    };
    assert_eq!(value("1"), 2.0);
    assert!((value("3") + 2.0 / 3.0).abs() <= 1e-15);
    assert_eq!(value("4"), 0.0);
    assert!(text.contains("quadrature exactness"));
}

#[test]
fn simulate_then_estimate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sample = path(dir.path(), "sample.csv");
    let out = run(&["simulate", "--d", "2", "--n", "800", "--seed", "3", "--out", &sample]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: Vec<String> = (0..2)
        .map(|i| {
            let report = path(dir.path(), &format!("report{i}.tsv"));
            let grid = path(dir.path(), &format!("grid{i}.tsv"));
            let out = run(&["estimate", "--sample", &sample, "--out", &report, "--grid-out", &grid]);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            std::fs::read_to_string(report).unwrap() + &std::fs::read_to_string(grid).unwrap()
        })
        .collect();
    assert_eq!(reports[0], reports[1]);
    assert!(reports[0].starts_with("# n=800"));
}

#[test]
fn plugin_estimate_needs_first_stage() {
    let dir = tempfile::tempdir().unwrap();
    let sample = path(dir.path(), "s.csv");
    let first = path(dir.path(), "f.csv");
    assert!(run(&["simulate", "--n", "500", "--design", "boundary-vanishing", "--out", &sample]).status.success());
    assert!(run(&["simulate", "--n", "500", "--seed", "9", "--design", "boundary-vanishing", "--out", &first])
        .status
        .success());
    let report = path(dir.path(), "r.tsv");
    let out = run(&["estimate", "--sample", &sample, "--mode", "plugin", "--out", &report]);
    assert_eq!(out.status.code(), Some(5));
    let out = run(&["estimate", "--sample", &sample, "--mode", "plugin", "--first-stage", &first, "--out", &report]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["estimate", "--sample", &sample, "--mode", "plugin", "--first-stage", &first, "--trim", "0", "--out", &report]);
    assert_eq!(out.status.code(), Some(5));
    // unbounded 1/f_X in ideal mode without a trim level
    let out = run(&["estimate", "--sample", &sample, "--design", "boundary-vanishing", "--out", &report]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn bench_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let config = path(dir.path(), "bench.toml");
    std::fs::write(
        &config,
        "d = 2\nreplications = 2\nn_grid = [300, 600]\nseed = 4\np = inf\n\n[design]\nkind = \"uniform_hemisphere\"\n\n\
         [coefficient]\nkind = \"hemisphere_bump\"\nmean = [1.0, 0.0]\nkappa = 2.0\n",
    )
    .unwrap();
    let table = path(dir.path(), "risk.tsv");
    let plot = path(dir.path(), "risk.svg");
    let out = run(&["bench", "--config", &config, "--out", &table, "--plot", &plot]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&table).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 2);
    let svg = std::fs::read_to_string(&plot).unwrap();
    for row in &rows {
        let mean: f64 = row[2].parse().unwrap();
        assert!(mean.is_finite() && mean >= 0.0);
        assert!(svg.contains(&format!("n={} mean={}", row[0], row[2])));
    }
    assert!(text.contains("p=inf"));
}

#[test]
fn distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(dir.path(), "missing.csv");
    let out = run(&["estimate", "--sample", &missing, "--out", &path(dir.path(), "r.tsv")]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot open"));

    let bad = path(dir.path(), "bad.toml");
    std::fs::write(&bad, "d = [oops").unwrap();
    let out = run(&["bench", "--config", &bad, "--out", &path(dir.path(), "t.tsv")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed config"));

    let decreasing = path(dir.path(), "dec.toml");
    std::fs::write(&decreasing, "n_grid = [600, 300]\n").unwrap();
    let out = run(&["bench", "--config", &decreasing, "--out", &path(dir.path(), "t.tsv")]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly increasing"));

    let out = bin().args(["inspect"]).env("NEEDLET_CHOICE_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin().args(["inspect"]).env("NEEDLET_CHOICE_THREADS", "2").output().unwrap();
    assert!(out.status.success());

    assert_eq!(run(&["simulate", "--n", "10"]).status.code(), Some(2));
    let out = run(&["simulate", "--d", "3", "--mean", "1,0", "--n", "10", "--out", &path(dir.path(), "s.csv")]);
    assert_eq!(out.status.code(), Some(5));
}
