use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::geodesic::{traverse, Geodesic, Traversal};
use crate::grid::{CellIndex, GridSpec};
use crate::rng;

/// The ordered cells `(c_0, …, c_{N_p})` met by an off-skeleton geodesic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassSignature {
    grid: GridSpec,
    cells: Vec<CellIndex>,
}

impl ClassSignature {
    pub fn cells(&self) -> &[CellIndex] {
        &self.cells
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Number of hyperplane crossings, `N_p`.
    pub fn crossing_count(&self) -> usize {
        self.cells.len() - 1
    }

    /// Consecutive cells differ in exactly one coordinate, by ±1 modulo `n`.
    pub fn is_face_connected(&self) -> bool {
        let n = self.grid.n();
        if n == 1 {
            return true;
        }
        self.cells.windows(2).all(|w| {
            let mut changed = 0;
            for (&a, &b) in w[0].coords().iter().zip(w[1].coords()) {
                if a != b {
                    let up = a % n + 1 == b;
                    let down = b % n + 1 == a;
                    if !(up || down) {
                        return false;
                    }
                    changed += 1;
                }
            }
            changed == 1
        })
    }
}

/// Class signature of a traversal; defined only off the grid skeleton.
pub fn class_signature(traversal: &Traversal) -> Result<ClassSignature> {
    if traversal.touches_skeleton() {
        return Err(Error::SkeletonTouch);
    }
    Ok(ClassSignature {
        grid: *traversal.grid(),
        cells: traversal.segments().iter().map(|s| s.cell.clone()).collect(),
    })
}

/// A grid vertex in unfolded boundary coordinates `(k, l)`: the intersection
/// of the vertical hyperplane `x = k/n` and the horizontal one `y = l/n`.
pub type Vertex = (i64, i64);

/// The split of the vertices enclosed between the start and end cells into
/// those passed with the vertical hyperplane crossed first (`s1`) and those
/// with the horizontal hyperplane crossed first (`s2`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSeparation {
    pub start: CellIndex,
    /// Unfolded displacement, in cells, from the start cell to the end cell.
    pub end_offset: [i64; 2],
    pub s1: BTreeSet<Vertex>,
    pub s2: BTreeSet<Vertex>,
}

impl VertexSeparation {
    /// Whether the two geodesics start in the same cell and end in the same
    /// unfolded cell, so their separations are comparable.
    pub fn same_endpoints(&self, other: &Self) -> bool {
        self.start == other.start && self.end_offset == other.end_offset
    }
}

/// Vertex separation of a planar geodesic over `[0, T]`.
pub fn vertex_separation(
    geodesic: &Geodesic,
    grid: &GridSpec,
    horizon: f64,
) -> Result<VertexSeparation> {
    if grid.d() != 2 {
        return Err(Error::DimensionUnsupported { d: grid.d() });
    }
    let tr = traverse(geodesic, grid, horizon)?;
    separation_of(&tr)
}

pub(crate) fn separation_of(tr: &Traversal) -> Result<VertexSeparation> {
    if tr.grid().d() != 2 {
        return Err(Error::DimensionUnsupported { d: tr.grid().d() });
    }
    if tr.touches_skeleton() {
        return Err(Error::SkeletonTouch);
    }
    let vertical: Vec<_> = tr.crossings_of_type(1).map(|c| (c.boundary, c.time)).collect();
    let horizontal: Vec<_> = tr.crossings_of_type(2).map(|c| (c.boundary, c.time)).collect();
    let mut s1 = BTreeSet::new();
    let mut s2 = BTreeSet::new();
    for &(k, tv) in &vertical {
        for &(l, th) in &horizontal {
            if tv < th {
                s1.insert((k, l));
            } else {
                s2.insert((k, l));
            }
        }
    }
    let disp = tr.cell_displacement();
    Ok(VertexSeparation {
        start: tr.first_cell().clone(),
        end_offset: [disp[0], disp[1]],
        s1,
        s2,
    })
}

/// Distinct class signatures met by a batch of random geodesics.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub d: usize,
    pub n: u64,
    pub horizon: f64,
    pub samples: usize,
    /// Samples discarded because they touched the skeleton or lay in `Γ_H`.
    pub skipped: usize,
    pub distinct: usize,
}

/// Samples `samples` uniform geodesics and counts distinct signatures.
pub fn classes_polynomial_census(
    grid: &GridSpec,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<CensusReport> {
    let mut rng = rng::seeded_rng(rng::derive_seed(&[seed, 0xC3]));
    let mut seen: HashSet<Vec<CellIndex>> = HashSet::new();
    let mut skipped = 0;
    for _ in 0..samples {
        let g = Geodesic::random(grid.d(), &mut rng);
        match traverse(&g, grid, horizon) {
            Ok(tr) if !tr.touches_skeleton() => {
                seen.insert(tr.segments().iter().map(|s| s.cell.clone()).collect());
            }
            Ok(_) | Err(Error::GammaHGeodesic) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(CensusReport {
        d: grid.d(),
        n: grid.n(),
        horizon,
        samples,
        skipped,
        distinct: seen.len(),
    })
}

/// Growth diagnostics across censuses ordered by `n`: the local exponent
/// `ln(D_2/D_1) / ln(n_2/n_1)` between neighbours, and the least-squares
/// slope of `ln D` against `ln n` over all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusGrowth {
    pub local_exponents: Vec<(u64, u64, f64)>,
    pub fitted_exponent: Option<f64>,
}

pub fn census_growth(reports: &[CensusReport]) -> CensusGrowth {
    let pts: Vec<(u64, f64, f64)> = reports
        .iter()
        .filter(|r| r.distinct > 0)
        .map(|r| (r.n, (r.n as f64).ln(), (r.distinct as f64).ln()))
        .collect();
    let local_exponents = pts
        .windows(2)
        .filter(|w| w[0].0 != w[1].0)
        .map(|w| (w[0].0, w[1].0, (w[1].2 - w[0].2) / (w[1].1 - w[0].1)))
        .collect();
    let fitted_exponent = crate::stats::least_squares_slope(
        &pts.iter().map(|p| (p.1, p.2)).collect::<Vec<_>>(),
    );
    CensusGrowth {
        local_exponents,
        fitted_exponent,
    }
}
