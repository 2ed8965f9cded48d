use randgcc::ell::{dense_sweep, ell_monotone_check, estimate_ell, CandidatePolicy};
use randgcc::{occupation, CellIndex, Checkerboard, Geodesic, GridSpec};

#[test]
fn estimate_is_below_vertex_pair_lines() {
    let grid = GridSpec::new(2, 4).unwrap();
    let board = Checkerboard::sample(grid, 0.6, 21).unwrap();
    let t = 0.6;
    let policy = CandidatePolicy::default_for(&grid, t);
    let est = estimate_ell(&board, t, &policy, 1).unwrap();
    for v in [(0, 0), (1, 3), (2, 2), (3, 1)] {
        for w in [(1, 0), (1, 1), (2, 1), (-1, 3), (0, -1)] {
            let norm = ((w.0 * w.0 + w.1 * w.1) as f64).sqrt();
            let dir = [w.0 as f64 / norm, w.1 as f64 / norm];
            let origin = [v.0 as f64 / 4.0 + policy.eta, v.1 as f64 / 4.0];
            let g = Geodesic::new(&origin, &dir).unwrap();
            if g.in_gamma_h(&grid) {
                continue;
            }
            assert!(est.value <= occupation(&board, &g, t).unwrap());
        }
    }
}

#[test]
fn witness_recomputes_in_three_dimensions() {
    let grid = GridSpec::new(3, 3).unwrap();
    let board = Checkerboard::sample(grid, 0.5, 8).unwrap();
    let policy = CandidatePolicy {
        random_count: 64,
        ..CandidatePolicy::default_for(&grid, 0.5)
    };
    let est = estimate_ell(&board, 0.5, &policy, 2).unwrap();
    let g = est.witness_geodesic().unwrap();
    assert!((occupation(&board, &g, 0.5).unwrap() - est.value).abs() <= 1e-12);
    assert!(est.value <= board.measure());
}

#[test]
fn estimate_ignores_the_thread_count() {
    let grid = GridSpec::new(2, 6).unwrap();
    let board = Checkerboard::sample(grid, 0.5, 30).unwrap();
    let policy = CandidatePolicy::default_for(&grid, 0.7);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| estimate_ell(&board, 0.7, &policy, 5).unwrap());
    let b = four.install(|| estimate_ell(&board, 0.7, &policy, 5).unwrap());
    assert_eq!(a, b);
    let a = one.install(|| dense_sweep(&board, 0.7, 24, 40).unwrap());
    let b = four.install(|| dense_sweep(&board, 0.7, 24, 40).unwrap());
    assert_eq!(a, b);
}

#[test]
fn nearly_full_board_at_long_horizon() {
    // every cell but one: a line can stay in the white cell only briefly
    let grid = GridSpec::new(2, 3).unwrap();
    let cells: Vec<CellIndex> = (0..9)
        .filter(|&f| f != 4)
        .map(|f| grid.cell_at(f))
        .collect();
    let board = Checkerboard::from_cells(grid, cells.iter()).unwrap();
    let policy = CandidatePolicy::default_for(&grid, 0.9);
    let est = estimate_ell(&board, 0.9, &policy, 0).unwrap();
    let sweep = dense_sweep(&board, 0.9, 90, 180).unwrap();
    // the longest chord of a cell is sqrt(2)/3
    let floor = 1.0 - (2f64).sqrt() / 3.0 / 0.9;
    assert!((est.value - floor).abs() < 1e-3, "{}", est.value);
    assert!(est.value <= sweep.value + 1e-4);
    assert!(est.value >= sweep.value - sweep.slack());
    assert!(sweep.value <= board.measure() + sweep.slack());
}

#[test]
fn shorter_horizon_never_looks_worse() {
    let grid = GridSpec::new(2, 5).unwrap();
    let policy = CandidatePolicy::default_for(&grid, 0.8);
    for seed in 0..5 {
        let board = Checkerboard::sample(grid, 0.5, 400 + seed).unwrap();
        let r = ell_monotone_check(&board, 0.8, 3, &policy, seed).unwrap();
        assert!(!r.violation);
        assert!(r.reduced.value <= r.full.value + r.slack);
        assert!((r.reduced_horizon - 0.8 / 3.0).abs() < 1e-15);
    }
}
