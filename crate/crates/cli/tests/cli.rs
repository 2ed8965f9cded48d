use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use randgcc::Checkerboard;

fn randgcc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randgcc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = randgcc(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn sample(dir: &Path) {
    ok(dir, &["sample", "--d", "2", "--n", "6", "--eps", "0.5", "--seed", "3", "--out", "board.json"]);
}

#[test]
fn sample_writes_a_readable_board() {
    let dir = tempfile::tempdir().unwrap();
    sample(dir.path());
    let text = fs::read_to_string(dir.path().join("board.json")).unwrap();
    let board = Checkerboard::from_document(&text).unwrap();
    assert_eq!(board.grid().n(), 6);
    assert_eq!(board.seed(), 3);
    assert_eq!(board, Checkerboard::sample(*board.grid(), 0.5, 3).unwrap());
}

#[test]
fn traverse_writes_segments_and_crossings() {
    let dir = tempfile::tempdir().unwrap();
    sample(dir.path());
    ok(
        dir.path(),
        &[
            "traverse", "--board", "board.json", "--origin", "0.1,0.2", "--dir", "3,4", "--T", "0.5",
            "--out", "seg.csv", "--crossings", "cross.csv",
        ],
    );
    let seg = fs::read_to_string(dir.path().join("seg.csv")).unwrap();
    let mut lines = seg.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(header.len() >= 3);
    let rows = lines.count();
    let cross = fs::read_to_string(dir.path().join("cross.csv")).unwrap();
    assert_eq!(cross.lines().count() - 1, rows - 1);
}

#[test]
fn ell_documents_are_json() {
    let dir = tempfile::tempdir().unwrap();
    sample(dir.path());
    ok(dir.path(), &["ell", "--board", "board.json", "--T", "0.6", "--out", "ell.json"]);
    ok(
        dir.path(),
        &["ell", "--board", "board.json", "--T", "0.6", "--dense", "--steps", "16", "--angles", "24", "--out", "dense.json"],
    );
    let est: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ell.json")).unwrap()).unwrap();
    let dense: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("dense.json")).unwrap()).unwrap();
    let a = est["value"].as_f64().unwrap();
    let b = dense["value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&a));
    assert!(dense["resolution"].is_object());
    assert!(a <= b + 1e-4);
}

#[test]
fn separations_list_one_partition_per_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pts.csv"), "x,y\n0,0\n1,0\n0,1\n1,1\n").unwrap();
    ok(dir.path(), &["separations", "--points", "pts.csv", "--out", "fast.txt"]);
    ok(dir.path(), &["separations", "--points", "pts.csv", "--bruteforce", "--out", "slow.txt"]);
    let fast = fs::read(dir.path().join("fast.txt")).unwrap();
    assert_eq!(fast, fs::read(dir.path().join("slow.txt")).unwrap());
    // a square: empty side, 4 corners, 2 adjacent pairs
    assert_eq!(String::from_utf8(fast).unwrap().lines().count(), 7);
}

#[test]
fn largedev_prints_a_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &["largedev", "--m", "10", "--c", "1", "--eps", "0.5", "--delta", "0.5", "--trials", "10000", "--seed", "1", "--exact"],
    );
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "m,c,epsilon,delta,trials,empirical_tail,exact_tail,envelope"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 8);
    assert_eq!(row[0], "10");
    let exact: f64 = row[6].parse().unwrap();
    assert!((exact - 0.001953125).abs() < 1e-12);
}

#[test]
fn converge_writes_three_tables() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("conv.toml"),
        "d = 2\nT = 0.5\nepsilon = 0.5\ndelta = 0.15\nn_values = [3, 4]\ntrials_per_n = 4\nmaster_seed = 5\n",
    )
    .unwrap();
    ok(dir.path(), &["converge", "--config", "conv.toml", "--out-dir", "out"]);
    let out = dir.path().join("out");
    let summary = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    let hist = fs::read_to_string(out.join("histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 2 * 20);
    let trials = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 2 * 4);
}

#[test]
fn render_draws_svg() {
    let dir = tempfile::tempdir().unwrap();
    sample(dir.path());
    ok(
        dir.path(),
        &["render", "--board", "board.json", "--geodesic", "0.1,0.1,1,1", "--T", "0.9", "--out", "b.svg"],
    );
    let svg = fs::read_to_string(dir.path().join("b.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("<polyline"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_eps = randgcc(
        dir.path(),
        &["sample", "--d", "2", "--n", "4", "--eps", "1.5", "--seed", "0", "--out", "b.json"],
    );
    assert_eq!(bad_eps.status.code(), Some(2));
    assert!(!dir.path().join("b.json").exists());

    sample(dir.path());
    let zero_dir = randgcc(
        dir.path(),
        &["traverse", "--board", "board.json", "--origin", "0.1,0.2", "--dir", "0,0", "--T", "0.5", "--out", "s.csv"],
    );
    assert_eq!(zero_dir.status.code(), Some(2));

    let long_horizon = randgcc(dir.path(), &["ell", "--board", "board.json", "--T", "1.5", "--out", "e.json"]);
    assert_eq!(long_horizon.status.code(), Some(2));

    let bad_flag = randgcc(dir.path(), &["sample", "--d", "two"]);
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = randgcc(dir.path(), &["ell", "--board", "nope.json", "--T", "0.5", "--out", "e.json"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
}
