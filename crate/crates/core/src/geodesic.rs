//! Unit-speed geodesics on the flat torus and their exact decomposition into
//! grid cells.
//!
//! Crossing times are always evaluated in closed form, `t = (b/n - x_i) / u_i`
//! for the unfolded boundary index `b`, never by accumulating increments, so
//! the `j`-th crossing of a hyperplane type agrees with `t_0 + j·α` up to a
//! few ulps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::grid::{cell_floor, wrap_unit, CellIndex, Checkerboard, GridSpec};

/// Two hyperplane contacts closer than this (in time) count as touching the
/// codimension-2 skeleton of the grid.
pub const SKELETON_TOLERANCE: f64 = 1e-12;

/// Tolerance on `‖direction‖ = 1`.
pub const UNIT_TOLERANCE: f64 = 1e-12;

type Vector = SmallVec<[f64; 4]>;

/// A unit-speed straight line on `R^d / Z^d`, started at `origin ∈ [0,1)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geodesic {
    origin: Vector,
    direction: Vector,
}

impl Geodesic {
    /// Validates a unit direction and wraps the origin onto `[0, 1)^d`.
    pub fn new(origin: &[f64], direction: &[f64]) -> Result<Self> {
        if origin.is_empty() || origin.len() != direction.len() {
            return Err(Error::InvalidGeodesic(format!(
                "origin has {} components, direction has {}",
                origin.len(),
                direction.len()
            )));
        }
        if origin.iter().chain(direction).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeodesic("non-finite component".into()));
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidGeodesic(format!(
                "direction has norm {norm}, expected 1"
            )));
        }
        Ok(Self {
            origin: origin.iter().map(|&x| wrap_unit(x)).collect(),
            direction: direction.iter().copied().collect(),
        })
    }

    /// Like [`Geodesic::new`] but rescales any nonzero direction to unit length.
    pub fn normalized(origin: &[f64], direction: &[f64]) -> Result<Self> {
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidGeodesic("direction must be nonzero".into()));
        }
        let unit: Vector = direction.iter().map(|v| v / norm).collect();
        Self::new(origin, &unit)
    }

    /// Planar geodesic with direction `(cos θ, sin θ)`.
    pub fn from_angle(origin: [f64; 2], theta: f64) -> Result<Self> {
        Self::new(&origin, &[theta.cos(), theta.sin()])
    }

    /// Uniform origin on the torus and uniform direction on the sphere.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        assert!(d >= 1, "dimension must be positive");
        let origin: Vector = (0..d).map(|_| rng.random::<f64>()).collect();
        let direction: Vector = match d {
            1 => smallvec::smallvec![if rng.random::<bool>() { 1.0 } else { -1.0 }],
            2 => {
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                smallvec::smallvec![theta.cos(), theta.sin()]
            }
            _ => loop {
                let v: Vector = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    break v.iter().map(|x| x / norm).collect();
                }
            },
        };
        Self { origin, direction }
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    /// Position at time `t`, wrapped onto the torus.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.direction)
            .map(|(x, u)| wrap_unit(x + t * u))
            .collect()
    }

    /// The same line restarted at time `t`.
    pub fn advanced(&self, t: f64) -> Self {
        Self {
            origin: self.point_at(t).into_iter().collect(),
            direction: self.direction.clone(),
        }
    }

    /// Membership in `Γ_H`: the line stays inside a grid hyperplane, i.e. some
    /// direction component vanishes while the matching origin component sits
    /// exactly on a multiple of `1/n`.
    pub fn in_gamma_h(&self, grid: &GridSpec) -> bool {
        let nf = grid.n() as f64;
        self.origin
            .iter()
            .zip(&self.direction)
            .any(|(&x, &u)| u == 0.0 && (x * nf).round() / nf == x)
    }
}

#[derive(Debug, Clone, Copy)]
struct AxisWalk {
    x0: f64,
    u: f64,
    step: i64,
    next_boundary: i64,
    count: usize,
}

impl AxisWalk {
    #[inline]
    fn time_of(&self, boundary: i64, nf: f64) -> f64 {
        ((boundary as f64) / nf - self.x0) / self.u
    }
}

/// A hyperplane crossing emitted by the walker.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WalkCrossing {
    pub axis: usize,
    pub occurrence: usize,
    pub boundary: i64,
    pub time: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct WalkStep {
    pub t_entry: f64,
    pub t_exit: f64,
    pub flat: u64,
    /// Crossing that ends the segment; `None` for the final segment.
    pub crossing: Option<WalkCrossing>,
}

/// Incremental next-crossing walk over the periodic grid. Callers have
/// already rejected `Γ_H` and out-of-range horizons.
pub(crate) struct Walker {
    nf: f64,
    n: i64,
    horizon: f64,
    axes: SmallVec<[AxisWalk; 4]>,
    next_t: Vector,
    cell: SmallVec<[i64; 4]>,
    strides: SmallVec<[u64; 4]>,
    flat: u64,
    t: f64,
    done: bool,
}

impl Walker {
    pub fn new(geodesic: &Geodesic, grid: &GridSpec, horizon: f64) -> Self {
        let n = grid.n() as i64;
        let nf = grid.n() as f64;
        let mut axes = SmallVec::new();
        let mut next_t = Vector::new();
        let mut cell = SmallVec::new();
        let mut strides = SmallVec::new();
        let mut stride = 1u64;
        let mut flat = 0u64;
        for (&x0, &u) in geodesic.origin.iter().zip(&geodesic.direction) {
            let f = cell_floor(x0, grid.n());
            let on_face = (f as f64) / nf == x0;
            let (start, step, first) = if u > 0.0 {
                (f, 1, f + 1)
            } else if u < 0.0 {
                if on_face {
                    (f - 1, -1, f - 1)
                } else {
                    (f, -1, f)
                }
            } else {
                (f, 0, 0)
            };
            let axis = AxisWalk {
                x0,
                u,
                step,
                next_boundary: first,
                count: 0,
            };
            next_t.push(if step == 0 { f64::INFINITY } else { axis.time_of(first, nf) });
            let start = start.rem_euclid(n);
            flat += start as u64 * stride;
            cell.push(start);
            strides.push(stride);
            stride = stride.wrapping_mul(grid.n());
            axes.push(axis);
        }
        Self {
            nf,
            n,
            horizon,
            axes,
            next_t,
            cell,
            strides,
            flat,
            t: 0.0,
            done: false,
        }
    }

    pub fn cell_zero_based(&self) -> &[i64] {
        &self.cell
    }

    /// Times (≤ 0) of the faces the origin sits on, one per moving axis.
    fn start_contacts(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.axes.iter().enumerate().filter_map(move |(i, a)| {
            if a.step == 0 {
                return None;
            }
            let t = a.time_of(a.next_boundary - a.step, self.nf);
            (t > -SKELETON_TOLERANCE).then_some((i, t))
        })
    }

    /// Pending crossings at or just beyond the horizon, available once the
    /// walk has finished.
    fn end_contacts(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.next_t
            .iter()
            .enumerate()
            .filter(move |(_, &t)| t - self.horizon <= SKELETON_TOLERANCE)
            .map(|(i, &t)| (i, t))
    }

    #[inline]
    pub fn next_step(&mut self) -> Option<WalkStep> {
        if self.done {
            return None;
        }
        let mut axis = 0;
        let mut t_min = self.next_t[0];
        for (i, &t) in self.next_t.iter().enumerate().skip(1) {
            if t < t_min {
                t_min = t;
                axis = i;
            }
        }
        let t_entry = self.t;
        let flat = self.flat;
        if t_min.is_nan() || t_min >= self.horizon {
            self.done = true;
            return Some(WalkStep {
                t_entry,
                t_exit: self.horizon,
                flat,
                crossing: None,
            });
        }
        let a = &mut self.axes[axis];
        let crossing = WalkCrossing {
            axis,
            occurrence: a.count,
            boundary: a.next_boundary,
            time: t_min,
        };
        a.count += 1;
        a.next_boundary += a.step;
        let step = a.step;
        let fresh = a.time_of(a.next_boundary, self.nf);
        self.next_t[axis] = fresh;

        let stride = self.strides[axis];
        let c = &mut self.cell[axis];
        if step > 0 {
            if *c == self.n - 1 {
                *c = 0;
                self.flat -= (self.n as u64 - 1) * stride;
            } else {
                *c += 1;
                self.flat += stride;
            }
        } else if *c == 0 {
            *c = self.n - 1;
            self.flat += (self.n as u64 - 1) * stride;
        } else {
            *c -= 1;
            self.flat -= stride;
        }
        self.t = t_min;
        Some(WalkStep {
            t_entry,
            t_exit: t_min,
            flat,
            crossing: Some(crossing),
        })
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon < 1.0 {
        Ok(())
    } else {
        Err(Error::HorizonOutOfRange(horizon))
    }
}

fn check_dims(geodesic: &Geodesic, grid: &GridSpec) -> Result<()> {
    if geodesic.dim() != grid.d() {
        return Err(Error::InvalidGeodesic(format!(
            "geodesic has dimension {}, grid has {}",
            geodesic.dim(),
            grid.d()
        )));
    }
    Ok(())
}

/// Validates inputs shared by every traversal-based computation.
pub(crate) fn check_walk(geodesic: &Geodesic, grid: &GridSpec, horizon: f64) -> Result<()> {
    check_dims(geodesic, grid)?;
    check_horizon(horizon)?;
    if geodesic.in_gamma_h(grid) {
        return Err(Error::GammaHGeodesic);
    }
    Ok(())
}

/// Occupation fraction computed on the fly, abandoning the walk (returning
/// `None`) as soon as the fraction is certain to exceed `cutoff`.
///
/// The summation order matches [`occupation_time`], so an unpruned result
/// equals the traversal-based value bit for bit.
#[inline]
pub(crate) fn occupation_bounded(
    board: &Checkerboard,
    geodesic: &Geodesic,
    horizon: f64,
    cutoff: f64,
) -> Option<f64> {
    let mut walker = Walker::new(geodesic, board.grid(), horizon);
    let mut black = 0.0;
    while let Some(step) = walker.next_step() {
        if board.bit(step.flat) {
            black += step.t_exit - step.t_entry;
            if black / horizon > cutoff {
                return None;
            }
        }
    }
    Some(black / horizon)
}

/// `m_γ^T(ω)` without materializing the traversal.
pub fn occupation(board: &Checkerboard, geodesic: &Geodesic, horizon: f64) -> Result<f64> {
    check_walk(geodesic, board.grid(), horizon)?;
    Ok(occupation_bounded(board, geodesic, horizon, f64::INFINITY).expect("no cutoff"))
}

/// Time spent in one cell during one visit.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub cell: CellIndex,
    pub t_entry: f64,
    pub t_exit: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.t_exit - self.t_entry
    }
}

/// One hyperplane crossing. `axis` is the 1-based hyperplane type,
/// `occurrence` counts earlier crossings of the same type, and `boundary` is
/// the unfolded index `b` of the hyperplane `x_axis = b/n`, measured from the
/// cell that contains the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub axis: usize,
    pub occurrence: usize,
    pub boundary: i64,
    pub time: f64,
}

/// Ordered cell/time decomposition of a geodesic over `[0, T]`.
#[derive(Debug, Clone)]
pub struct Traversal {
    grid: GridSpec,
    horizon: f64,
    geodesic: Geodesic,
    segments: Vec<Segment>,
    crossings: Vec<Crossing>,
    counts: Vec<usize>,
    alphas: Vec<Option<f64>>,
    touches_skeleton: bool,
}

/// Decomposes `geodesic` over `[0, horizon]` into cell visits and hyperplane
/// crossings. Simultaneous crossings (within [`SKELETON_TOLERANCE`]) are kept
/// in time order, exact ties by ascending axis, and flag the traversal.
pub fn traverse(geodesic: &Geodesic, grid: &GridSpec, horizon: f64) -> Result<Traversal> {
    check_walk(geodesic, grid, horizon)?;
    let d = grid.d();
    let mut walker = Walker::new(geodesic, grid, horizon);
    let mut contacts: Vec<f64> = walker.start_contacts().map(|(_, t)| t).collect();
    let mut cell = walker.cell_zero_based().to_vec();
    let n = grid.n() as i64;
    let mut segments = Vec::new();
    let mut crossings = Vec::new();
    while let Some(step) = walker.next_step() {
        segments.push(Segment {
            cell: CellIndex::from_zero_based(&cell),
            t_entry: step.t_entry,
            t_exit: step.t_exit,
        });
        if let Some(c) = step.crossing {
            let dir = if geodesic.direction[c.axis] > 0.0 { 1 } else { -1 };
            cell[c.axis] = (cell[c.axis] + dir).rem_euclid(n);
            contacts.push(c.time);
            crossings.push(Crossing {
                axis: c.axis + 1,
                occurrence: c.occurrence,
                boundary: c.boundary,
                time: c.time,
            });
        }
    }
    contacts.extend(walker.end_contacts().map(|(_, t)| t));
    contacts.sort_by(f64::total_cmp);
    let touches_skeleton = contacts
        .windows(2)
        .any(|w| w[1] - w[0] <= SKELETON_TOLERANCE);

    let mut counts = vec![0usize; d];
    for c in &crossings {
        counts[c.axis - 1] += 1;
    }
    let nf = grid.n() as f64;
    let alphas = (0..d)
        .map(|i| (counts[i] > 0).then(|| 1.0 / (nf * geodesic.direction[i].abs())))
        .collect();

    Ok(Traversal {
        grid: *grid,
        horizon,
        geodesic: geodesic.clone(),
        segments,
        crossings,
        counts,
        alphas,
        touches_skeleton,
    })
}

impl Traversal {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn geodesic(&self) -> &Geodesic {
        &self.geodesic
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// All crossings in time order. The position in this list is the
    /// sequential crossing index; `(axis, occurrence)` is its image under the
    /// type/occurrence bijection.
    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    /// Crossings of hyperplane type `axis` (1-based), in order.
    pub fn crossings_of_type(&self, axis: usize) -> impl Iterator<Item = &Crossing> {
        self.crossings.iter().filter(move |c| c.axis == axis)
    }

    /// Total number of crossings, `N_p`.
    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    /// Number of crossings of type `axis` (1-based), i.e. `k_i + 1`.
    pub fn count(&self, axis: usize) -> usize {
        self.counts[axis - 1]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Constant time `α_i` between consecutive type-`axis` hyperplanes, when
    /// that type is crossed at all.
    pub fn alpha(&self, axis: usize) -> Option<f64> {
        self.alphas[axis - 1]
    }

    pub fn touches_skeleton(&self) -> bool {
        self.touches_skeleton
    }

    pub fn first_cell(&self) -> &CellIndex {
        &self.segments[0].cell
    }

    pub fn last_cell(&self) -> &CellIndex {
        &self.segments[self.segments.len() - 1].cell
    }

    /// Net unfolded displacement, in cells, between the first and last cell.
    pub fn cell_displacement(&self) -> Vec<i64> {
        let mut disp = vec![0i64; self.grid.d()];
        for c in &self.crossings {
            disp[c.axis - 1] += if self.geodesic.direction[c.axis - 1] > 0.0 { 1 } else { -1 };
        }
        disp
    }

    /// Fraction of `[0, T]` spent in each visited cell; the weights sum to 1.
    pub fn occupation_weights(&self) -> BTreeMap<CellIndex, f64> {
        let mut weights = BTreeMap::new();
        for s in &self.segments {
            *weights.entry(s.cell.clone()).or_insert(0.0) += s.duration() / self.horizon;
        }
        weights
    }

    /// Traversal export: `seg_index,i1..id,t_entry,t_exit`.
    pub fn segments_csv(&self) -> String {
        let mut out = String::from("seg_index");
        for k in 1..=self.grid.d() {
            let _ = write!(out, ",i{k}");
        }
        out.push_str(",t_entry,t_exit\n");
        for (k, s) in self.segments.iter().enumerate() {
            let _ = write!(out, "{k}");
            for c in s.cell.coords() {
                let _ = write!(out, ",{c}");
            }
            let _ = writeln!(out, ",{:.16e},{:.16e}", s.t_entry, s.t_exit);
        }
        out
    }

    /// Crossing export: `order,axis_type,occurrence,time`.
    pub fn crossings_csv(&self) -> String {
        let mut out = String::from("order,axis_type,occurrence,time\n");
        for (k, c) in self.crossings.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{:.16e}", k + 1, c.axis, c.occurrence, c.time);
        }
        out
    }
}

/// `m_γ^T(ω)`, the fraction of `[0, T]` the traversal spends in the domain.
pub fn occupation_time(traversal: &Traversal, board: &Checkerboard) -> Result<f64> {
    if traversal.grid() != board.grid() {
        return Err(Error::GridMismatch);
    }
    let black: f64 = traversal
        .segments
        .iter()
        .filter(|s| board.contains(&s.cell))
        .fold(0.0, |acc, s| acc + (s.t_exit - s.t_entry));
    Ok(black / traversal.horizon)
}

/// Splits a horizon into `(T/m, m)` with the smallest `m ≥ 1` giving
/// `T/m ∈ (0, 1)`.
pub fn reduce_horizon(horizon: f64) -> Result<(f64, u64)> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::NonpositiveHorizon(horizon));
    }
    let m = horizon.floor() as u64 + 1;
    Ok((horizon / m as f64, m))
}
