//! Upper estimates of `ℓ^T(ω) = inf_γ m_γ^T(ω)`.
//!
//! [`estimate_ell`] evaluates lines through pairs of lattice vertices nudged
//! off the skeleton, a batch of random lines, and then refines the best few by
//! pattern search. [`dense_sweep`] is a brute-force tensor-grid minimizer for
//! small planar boards.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{check_walk, occupation_bounded, Geodesic, Walker};
use crate::grid::{wrap_unit, Checkerboard, GridSpec};
use crate::rng;

/// Number of candidates handed to the refinement stage.
pub const REFINE_STARTS: usize = 10;

/// Knobs of the candidate search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidatePolicy {
    /// Largest Euclidean length, in cells, of a vertex-to-vertex offset.
    pub vertex_pair_range: u64,
    /// Off-skeleton shift applied to every vertex-pair line.
    pub eta: f64,
    pub random_count: usize,
    pub refine_iters: usize,
    /// Value change below which pattern search stops refining.
    pub refine_tolerance: f64,
}

impl CandidatePolicy {
    pub fn default_for(grid: &GridSpec, horizon: f64) -> Self {
        let n = grid.n() as f64;
        Self {
            vertex_pair_range: min_range(grid, horizon),
            eta: 1.0 / (8.0 * n * n),
            random_count: 512,
            refine_iters: 200,
            refine_tolerance: 1e-4,
        }
    }

    pub fn validate(&self, grid: &GridSpec, horizon: f64) -> Result<()> {
        let n = grid.n() as f64;
        if !(self.eta > 0.0 && self.eta < 1.0 / (2.0 * n * n)) {
            return Err(Error::InvalidPolicy(format!(
                "eta {} outside (0, 1/(2n^2))",
                self.eta
            )));
        }
        let k = min_range(grid, horizon);
        if self.vertex_pair_range < k {
            return Err(Error::InvalidPolicy(format!(
                "vertex_pair_range {} below ceil(nT)+1 = {k}",
                self.vertex_pair_range
            )));
        }
        if !(self.refine_tolerance > 0.0 && self.refine_tolerance.is_finite()) {
            return Err(Error::InvalidPolicy("refine_tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn min_range(grid: &GridSpec, horizon: f64) -> u64 {
    (grid.n() as f64 * horizon).ceil() as u64 + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EllMethod {
    Candidates,
    Refined,
    DenseSweep,
}

/// Parameter-grid spacing of a dense sweep and the matching value slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResolution {
    pub origin_step: f64,
    pub angle_step: f64,
    /// Largest displacement over `[0, T]` between any line and its nearest
    /// swept line.
    pub radius: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllEstimate {
    pub value: f64,
    pub witness: Witness,
    pub method: EllMethod,
    pub resolution: Option<SweepResolution>,
    pub horizon: f64,
    /// Pattern-search tolerance used, for the candidate methods.
    pub refine_tolerance: Option<f64>,
}

impl EllEstimate {
    fn new(value: f64, g: &Geodesic, method: EllMethod, horizon: f64) -> Self {
        Self {
            value,
            witness: Witness {
                origin: g.origin().to_vec(),
                direction: g.direction().to_vec(),
            },
            method,
            resolution: None,
            horizon,
            refine_tolerance: None,
        }
    }

    pub fn witness_geodesic(&self) -> Result<Geodesic> {
        Geodesic::new(&self.witness.origin, &self.witness.direction)
    }

    /// How far the value may sit from the best value reachable by the method.
    pub fn slack(&self) -> f64 {
        match (self.resolution, self.refine_tolerance) {
            (Some(r), _) => r.slack,
            (None, Some(t)) => t,
            (None, None) => 0.0,
        }
    }

    pub fn to_document(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("estimate serializes");
        s.push('\n');
        s
    }
}

fn check_dimension(grid: &GridSpec, allowed: &[usize]) -> Result<()> {
    if allowed.contains(&grid.d()) {
        Ok(())
    } else {
        Err(Error::DimensionUnsupported { d: grid.d() })
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon < 1.0 {
        Ok(())
    } else {
        Err(Error::HorizonOutOfRange(horizon))
    }
}

/// A line that avoids the skeleton for every `n`; used when every line gives
/// the same value.
fn trivial_witness(d: usize) -> Geodesic {
    let origin: Vec<f64> = (0..d).map(|i| 0.5 / (i as f64 + 3.0)).collect();
    let direction: Vec<f64> = (0..d).map(|i| ((i + 2) as f64).sqrt()).collect();
    Geodesic::normalized(&origin, &direction).expect("fixed witness is valid")
}

/// Primitive integer offsets of Euclidean length at most `k`.
fn primitive_offsets(d: usize, k: u64) -> Vec<Vec<i64>> {
    let k = k as i64;
    let mut out = Vec::new();
    let mut w = vec![-k; d];
    loop {
        let norm2: i64 = w.iter().map(|x| x * x).sum();
        if norm2 > 0 && norm2 <= k * k && w.iter().fold(0, |g, &x| gcd(g, x.unsigned_abs())) == 1 {
            out.push(w.clone());
        }
        let mut i = 0;
        loop {
            if i == d {
                return out;
            }
            if w[i] < k {
                w[i] += 1;
                break;
            }
            w[i] = -k;
            i += 1;
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Deterministic `(value, index)` top list of fixed capacity.
#[derive(Debug, Clone, Default)]
struct TopList {
    items: Vec<(f64, usize, Geodesic)>,
}

impl TopList {
    fn cutoff(&self) -> f64 {
        if self.items.len() < REFINE_STARTS {
            f64::INFINITY
        } else {
            self.items[REFINE_STARTS - 1].0
        }
    }

    fn offer(&mut self, value: f64, index: usize, g: Geodesic) {
        let pos = self
            .items
            .partition_point(|(v, i, _)| (*v, *i) < (value, index));
        if pos < REFINE_STARTS {
            self.items.insert(pos, (value, index, g));
            self.items.truncate(REFINE_STARTS);
        }
    }

    fn merge(mut self, other: TopList) -> TopList {
        for (v, i, g) in other.items {
            self.offer(v, i, g);
        }
        self
    }
}

/// Cutoff shared across workers. Values are nonnegative, so their bit
/// patterns order like the values.
struct SharedCutoff(AtomicU64);

impl SharedCutoff {
    fn new() -> Self {
        Self(AtomicU64::new(f64::INFINITY.to_bits()))
    }

    fn get(&self) -> f64 {
        f64::from_bits(self.0.load(AtomicOrdering::Relaxed))
    }

    fn lower(&self, v: f64) {
        self.0.fetch_min(v.to_bits(), AtomicOrdering::Relaxed);
    }
}

/// Evaluates one candidate into a chunk's top list, pruning against both the
/// chunk's and the shared cutoff. Pruning only discards lines that cannot
/// enter the global top list, so the outcome does not depend on scheduling.
fn consider(
    board: &Checkerboard,
    horizon: f64,
    g: Geodesic,
    index: usize,
    top: &mut TopList,
    shared: &SharedCutoff,
) {
    if g.in_gamma_h(board.grid()) {
        return;
    }
    let cutoff = top.cutoff().min(shared.get());
    if let Some(v) = occupation_bounded(board, &g, horizon, cutoff) {
        top.offer(v, index, g);
        if top.items.len() == REFINE_STARTS {
            shared.lower(top.cutoff());
        }
    }
}

/// Vertex-pair lines for one vertex: for every offset `w`, the line through
/// `v` with direction `w/|w|`, started at `v` and ended at `v`, each shifted
/// by `±η` along every axis.
fn vertex_candidates(
    grid: &GridSpec,
    horizon: f64,
    eta: f64,
    vertex: &[i64],
    offsets: &[Vec<i64>],
    mut emit: impl FnMut(Geodesic),
) {
    let d = grid.d();
    let nf = grid.n() as f64;
    let mut origin = vec![0.0; d];
    let mut dir = vec![0.0; d];
    for w in offsets {
        let norm = (w.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt();
        for (u, &x) in dir.iter_mut().zip(w) {
            *u = x as f64 / norm;
        }
        for anchor in [0.0, horizon] {
            for axis in 0..d {
                for sign in [1.0, -1.0] {
                    for i in 0..d {
                        origin[i] = vertex[i] as f64 / nf - anchor * dir[i];
                    }
                    origin[axis] += sign * eta;
                    if let Ok(g) = Geodesic::new(&origin, &dir) {
                        emit(g);
                    }
                }
            }
        }
    }
}

fn candidates_per_vertex(d: usize, offsets: usize) -> usize {
    offsets * 2 * 2 * d
}

/// Evaluates the structured and random candidate families plus any extra
/// lines, returning the best few in enumeration order of ties.
fn candidate_stage(
    board: &Checkerboard,
    horizon: f64,
    policy: &CandidatePolicy,
    seed: u64,
    extra: &[Geodesic],
) -> TopList {
    let grid = *board.grid();
    let d = grid.d();
    let offsets = primitive_offsets(d, policy.vertex_pair_range);
    let per_vertex = candidates_per_vertex(d, offsets.len());
    let vertices = grid.cell_count();
    let shared = SharedCutoff::new();

    let structured = (0..vertices)
        .into_par_iter()
        .map(|flat| {
            let vertex: Vec<i64> = grid
                .cell_at(flat)
                .coords()
                .iter()
                .map(|&c| c as i64 - 1)
                .collect();
            let mut top = TopList::default();
            let mut index = flat as usize * per_vertex;
            vertex_candidates(&grid, horizon, policy.eta, &vertex, &offsets, |g| {
                consider(board, horizon, g, index, &mut top, &shared);
                index += 1;
            });
            top
        })
        .reduce(TopList::default, TopList::merge);

    let base = vertices as usize * per_vertex;
    let mut rng = rng::seeded_rng(rng::derive_seed(&[seed, 0xE11]));
    let mut top = structured;
    for i in 0..policy.random_count {
        let g = Geodesic::random(d, &mut rng);
        consider(board, horizon, g, base + i, &mut top, &shared);
    }
    let base = base + policy.random_count;
    for (i, g) in extra.iter().enumerate() {
        consider(board, horizon, g.clone(), base + i, &mut top, &shared);
    }
    top
}

/// Search coordinates: origin followed by direction angles.
fn to_params(g: &Geodesic) -> Vec<f64> {
    let u = g.direction();
    let mut p = g.origin().to_vec();
    match u.len() {
        2 => p.push(u[1].atan2(u[0])),
        3 => {
            p.push(u[2].clamp(-1.0, 1.0).acos());
            p.push(u[1].atan2(u[0]));
        }
        _ => unreachable!("dimension checked by caller"),
    }
    p
}

fn direction_of(p: &[f64], d: usize) -> Vec<f64> {
    match d {
        2 => vec![p[2].cos(), p[2].sin()],
        3 => {
            let (st, ct) = p[3].sin_cos();
            let (sp, cp) = p[4].sin_cos();
            vec![st * cp, st * sp, ct]
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

fn from_params(p: &[f64], d: usize) -> Option<Geodesic> {
    Geodesic::normalized(&p[..d], &direction_of(p, d)).ok()
}

/// Comparison key for equal values: smaller angles first, then origin.
fn tie_key(p: &[f64], d: usize) -> impl Iterator<Item = f64> + '_ {
    p[d..].iter().chain(&p[..d]).copied()
}

fn better(a: (f64, &[f64]), b: (f64, &[f64]), d: usize) -> bool {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => tie_key(a.1, d)
            .zip(tie_key(b.1, d))
            .map(|(x, y)| x.total_cmp(&y))
            .find(|o| o.is_ne())
            == Some(std::cmp::Ordering::Less),
    }
}

/// Times at which angle moves pivot: the ends of the window and every
/// hyperplane crossing. Turning about a crossing keeps a line that passes
/// near a vertex passing near it.
fn pivot_times(board: &Checkerboard, g: &Geodesic, horizon: f64) -> Vec<f64> {
    let mut pivots = vec![0.0];
    let mut walker = Walker::new(g, board.grid(), horizon);
    while let Some(step) = walker.next_step() {
        if let Some(c) = step.crossing {
            pivots.push(c.time);
        }
    }
    pivots.push(horizon);
    pivots
}

/// Best-improvement pattern search with step halving. Origin steps start at
/// `4η`; angle steps start at `4η/T`, the rotation moving the far end by about
/// the same distance, and each angle step is tried about every pivot time.
/// Halving stops once no single move can change the value by more than the
/// refine tolerance.
fn pattern_search(
    board: &Checkerboard,
    horizon: f64,
    policy: &CandidatePolicy,
    start: &Geodesic,
    start_value: f64,
) -> (f64, Geodesic) {
    let d = board.grid().d();
    let mut best_p = to_params(start);
    let mut best_v = start_value;
    let mut best_g = start.clone();
    let mut pivots = pivot_times(board, &best_g, horizon);
    let mut origin_step = 4.0 * policy.eta;
    let mut angle_step = 4.0 * policy.eta / horizon;
    let min_step = policy.refine_tolerance / value_lipschitz(board.grid(), horizon);
    let mut iters = 0;
    while iters < policy.refine_iters && origin_step.max(horizon * angle_step) >= min_step {
        iters += 1;
        let mut round: Option<(f64, Vec<f64>, Geodesic)> = None;
        let mut moves: Vec<Vec<f64>> = Vec::new();
        for k in 0..d {
            for sign in [1.0, -1.0] {
                let mut p = best_p.clone();
                p[k] = wrap_unit(p[k] + sign * origin_step);
                moves.push(p);
            }
        }
        let u = best_g.direction();
        for k in d..best_p.len() {
            for sign in [1.0, -1.0] {
                let mut turned = best_p.clone();
                turned[k] += sign * angle_step;
                let u2 = direction_of(&turned, d);
                for &s in &pivots {
                    let mut p = turned.clone();
                    for i in 0..d {
                        p[i] = wrap_unit(best_p[i] + s * (u[i] - u2[i]));
                    }
                    moves.push(p);
                }
            }
        }
        for p in moves {
            let Some(g) = from_params(&p, d) else { continue };
            if g.in_gamma_h(board.grid()) {
                continue;
            }
            let cutoff = round.as_ref().map_or(best_v, |r| r.0);
            let Some(v) = occupation_bounded(board, &g, horizon, cutoff) else {
                continue;
            };
            let wins = match &round {
                None => v < best_v,
                Some((rv, rp, _)) => better((v, &p), (*rv, rp), d),
            };
            if wins {
                round = Some((v, p, g));
            }
        }
        match round {
            Some((v, p, g)) => {
                best_v = v;
                best_p = p;
                best_g = g;
                pivots = pivot_times(board, &best_g, horizon);
            }
            None => {
                origin_step /= 2.0;
                angle_step /= 2.0;
            }
        }
    }
    (best_v, best_g)
}

fn trivial_estimate(board: &Checkerboard, horizon: f64) -> Option<EllEstimate> {
    let value = if board.is_empty() {
        0.0
    } else if board.is_full() {
        1.0
    } else {
        return None;
    };
    Some(EllEstimate::new(
        value,
        &trivial_witness(board.grid().d()),
        EllMethod::Candidates,
        horizon,
    ))
}

fn estimate_with(
    board: &Checkerboard,
    horizon: f64,
    policy: &CandidatePolicy,
    seed: u64,
    extra: &[Geodesic],
) -> Result<EllEstimate> {
    let grid = board.grid();
    check_horizon(horizon)?;
    check_dimension(grid, &[2, 3])?;
    policy.validate(grid, horizon)?;
    let mut est = match trivial_estimate(board, horizon) {
        Some(e) => e,
        None => {
            let top = candidate_stage(board, horizon, policy, seed, extra);
            let (mut best_v, _, ref first) = top.items[0];
            let mut best_g = first.clone();
            let mut method = EllMethod::Candidates;
            let refined: Vec<(f64, Geodesic)> = top
                .items
                .par_iter()
                .map(|(v, _, g)| pattern_search(board, horizon, policy, g, *v))
                .collect();
            for (v, g) in refined {
                if v < best_v {
                    best_v = v;
                    best_g = g;
                    method = EllMethod::Refined;
                }
            }
            EllEstimate::new(best_v, &best_g, method, horizon)
        }
    };
    est.refine_tolerance = Some(policy.refine_tolerance);
    Ok(est)
}

/// Upper estimate of `ℓ^T(ω)` for `d ∈ {2, 3}`.
pub fn estimate_ell(
    board: &Checkerboard,
    horizon: f64,
    policy: &CandidatePolicy,
    seed: u64,
) -> Result<EllEstimate> {
    estimate_with(board, horizon, policy, seed, &[])
}

/// Value change per unit of displacement. A line moved by at most `r` over
/// `[0, T]` changes cell only while within `r` of a hyperplane; for a generic
/// direction that is at most `2r(nd + 2d^{3/2}/T)` of the horizon.
fn value_lipschitz(grid: &GridSpec, horizon: f64) -> f64 {
    let d = grid.d() as f64;
    2.0 * (d * grid.n() as f64 + 2.0 * d.powf(1.5) / horizon)
}

/// Resolution bookkeeping of a planar sweep.
pub fn sweep_resolution(grid: &GridSpec, horizon: f64, steps_origin: usize, steps_angle: usize) -> SweepResolution {
    let origin_step = 1.0 / steps_origin as f64;
    let angle_step = PI / steps_angle as f64;
    let radius = origin_step / 2.0 * std::f64::consts::SQRT_2 + horizon * angle_step / 2.0;
    let slack = (radius * value_lipschitz(grid, horizon)).min(1.0);
    SweepResolution {
        origin_step,
        angle_step,
        radius,
        slack,
    }
}

/// Fractional phase added to every swept angle so that no swept direction
/// is a rational slope.
const ANGLE_PHASE: f64 = 0.001_414_213_562_373_095;

/// Minimum of `m` over a tensor grid of origins and angles in `[0, π)`.
pub fn dense_sweep(
    board: &Checkerboard,
    horizon: f64,
    steps_origin: usize,
    steps_angle: usize,
) -> Result<EllEstimate> {
    let grid = *board.grid();
    check_dimension(&grid, &[2])?;
    check_horizon(horizon)?;
    if steps_origin == 0 || steps_angle == 0 {
        return Err(Error::InvalidPolicy("sweep steps must be positive".into()));
    }
    let resolution = sweep_resolution(&grid, horizon, steps_origin, steps_angle);
    let mut est = match trivial_estimate(board, horizon) {
        Some(mut e) => {
            e.method = EllMethod::DenseSweep;
            e
        }
        None => {
            let shared = SharedCutoff::new();
            let best = (0..steps_angle)
                .into_par_iter()
                .map(|b| {
                    let theta = (b as f64 + 0.5 + ANGLE_PHASE) * PI / steps_angle as f64;
                    let dir = [theta.cos(), theta.sin()];
                    let mut local: Option<(f64, usize, Geodesic)> = None;
                    for a1 in 0..steps_origin {
                        for a2 in 0..steps_origin {
                            let origin = [
                                (a1 as f64 + 0.5) / steps_origin as f64,
                                (a2 as f64 + 0.5) / steps_origin as f64,
                            ];
                            let Ok(g) = Geodesic::new(&origin, &dir) else { continue };
                            if check_walk(&g, &grid, horizon).is_err() {
                                continue;
                            }
                            let cutoff = local.as_ref().map_or(f64::INFINITY, |l| l.0).min(shared.get());
                            let Some(v) = occupation_bounded(board, &g, horizon, cutoff) else {
                                continue;
                            };
                            if local.as_ref().is_none_or(|l| v < l.0) {
                                shared.lower(v);
                                let index = (b * steps_origin + a1) * steps_origin + a2;
                                local = Some((v, index, g));
                            }
                        }
                    }
                    local
                })
                .reduce(
                    || None,
                    |a, b| match (a, b) {
                        (Some(x), Some(y)) => Some(if (y.0, y.1) < (x.0, x.1) { y } else { x }),
                        (x, None) => x,
                        (None, y) => y,
                    },
                )
                .expect("sweep evaluates at least one line");
            EllEstimate::new(best.0, &best.2, EllMethod::DenseSweep, horizon)
        }
    };
    est.resolution = Some(resolution);
    Ok(est)
}

/// Outcome of comparing the estimates at `T` and `T/m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub horizon: f64,
    pub reduced_horizon: f64,
    pub m: u64,
    pub full: EllEstimate,
    pub reduced: EllEstimate,
    pub slack: f64,
    /// `full.value < reduced.value − slack`.
    pub violation: bool,
}

/// Checks `ℓ̂^T ≥ ℓ̂^{T/m}` up to the combined slack. The estimate at `T/m`
/// also tries the `m` consecutive pieces of the witness found at `T`.
pub fn ell_monotone_check(
    board: &Checkerboard,
    horizon: f64,
    m: u64,
    policy: &CandidatePolicy,
    seed: u64,
) -> Result<MonotoneReport> {
    if m < 2 {
        return Err(Error::InvalidPolicy(format!("m = {m}, expected at least 2")));
    }
    let full = estimate_ell(board, horizon, policy, seed)?;
    let reduced_horizon = horizon / m as f64;
    let witness = full.witness_geodesic()?;
    let pieces: Vec<Geodesic> = (0..m)
        .map(|j| witness.advanced(j as f64 * reduced_horizon))
        .collect();
    let reduced_policy = CandidatePolicy {
        vertex_pair_range: policy
            .vertex_pair_range
            .max(min_range(board.grid(), reduced_horizon)),
        ..*policy
    };
    let reduced = estimate_with(board, reduced_horizon, &reduced_policy, seed, &pieces)?;
    let slack = full.slack() + reduced.slack();
    Ok(MonotoneReport {
        horizon,
        reduced_horizon,
        m,
        violation: full.value < reduced.value - slack,
        full,
        reduced,
        slack,
    })
}
