//! Periodic grids on the unit torus and random checkerboard domains.

use std::fmt;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rng;

/// Largest board we are willing to materialize as a bit array.
pub const MAX_BOARD_CELLS: u64 = 1 << 32;

/// Bytes filled per parallel work item when sampling a board.
const SAMPLE_CHUNK_BYTES: usize = 4096;

/// Dimension `d` and subdivision `n` of the regular grid of `n^d` cells on
/// `[0, 1)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    n: u64,
}

impl GridSpec {
    pub fn new(d: usize, n: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("subdivision must be at least 1".into()));
        }
        // n^d must stay below 2^62.
        let mut count: u64 = 1;
        for _ in 0..d {
            count = count
                .checked_mul(n)
                .filter(|&c| c <= 1 << 62)
                .ok_or(Error::DimensionTooLarge { d, n })?;
        }
        Ok(Self { d, n })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn cell_count(&self) -> u64 {
        self.n.pow(self.d as u32)
    }

    /// Side length `1/n` of a cell.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Row-major flat index with the first coordinate varying fastest.
    pub fn flat_index(&self, cell: &CellIndex) -> u64 {
        debug_assert_eq!(cell.dim(), self.d);
        cell.coords
            .iter()
            .rev()
            .fold(0u64, |acc, &c| acc * self.n + (c - 1))
    }

    pub fn cell_at(&self, mut flat: u64) -> CellIndex {
        let coords = (0..self.d)
            .map(|_| {
                let c = flat % self.n + 1;
                flat /= self.n;
                c
            })
            .collect();
        CellIndex { coords }
    }

    /// Maps arbitrary integer coordinates onto the canonical representative
    /// in `[1, n]^d`.
    pub fn canonicalize(&self, coords: &[i64]) -> CellIndex {
        assert_eq!(coords.len(), self.d, "coordinate count must equal d");
        let n = self.n as i128;
        CellIndex {
            coords: coords
                .iter()
                .map(|&c| ((c as i128 - 1).rem_euclid(n) + 1) as u64)
                .collect(),
        }
    }

    /// The cell containing `point` after wrapping onto the torus. Cells are
    /// half-open boxes `[(i-1)/n, i/n)`.
    pub fn cell_of(&self, point: &[f64]) -> CellIndex {
        assert_eq!(point.len(), self.d, "point dimension must equal d");
        CellIndex {
            coords: point
                .iter()
                .map(|&x| cell_floor(wrap_unit(x), self.n) as u64 + 1)
                .collect(),
        }
    }
}

/// Wraps a coordinate into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Zero-based index `k` of the half-open interval `[k/n, (k+1)/n)` that
/// contains `x ∈ [0, 1)`, with the boundary tests done on `k as f64 / n`
/// so they agree with the crossing-time formula used by the traversal.
pub(crate) fn cell_floor(x: f64, n: u64) -> i64 {
    let nf = n as f64;
    let mut k = ((x * nf).floor() as i64).clamp(0, n as i64 - 1);
    if k > 0 && (k as f64) / nf > x {
        k -= 1;
    } else if k + 1 < n as i64 && ((k + 1) as f64) / nf <= x {
        k += 1;
    }
    k
}

/// A grid cell, 1-based in every coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    coords: SmallVec<[u64; 4]>,
}

impl CellIndex {
    /// Builds a cell from 1-based coordinates, validating them against `grid`.
    pub fn new(grid: &GridSpec, coords: &[u64]) -> Result<Self> {
        if coords.len() != grid.d() {
            return Err(Error::InvalidGrid(format!(
                "cell has {} coordinates, grid has dimension {}",
                coords.len(),
                grid.d()
            )));
        }
        if let Some(&bad) = coords.iter().find(|&&c| c == 0 || c > grid.n()) {
            return Err(Error::InvalidGrid(format!(
                "coordinate {bad} is outside [1, {}]",
                grid.n()
            )));
        }
        Ok(Self {
            coords: coords.iter().copied().collect(),
        })
    }

    pub(crate) fn from_zero_based(coords: &[i64]) -> Self {
        Self {
            coords: coords.iter().map(|&c| c as u64 + 1).collect(),
        }
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, c) in self.coords.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// A realization of the random domain: each cell is independently part of
/// the domain with probability `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkerboard {
    grid: GridSpec,
    epsilon: f64,
    seed: u64,
    /// Bit `k` of the array (byte `k / 8`, bit `k % 8`) is the cell with flat
    /// index `k`.
    bits: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct BoardDocument {
    d: usize,
    n: u64,
    epsilon: f64,
    seed: u64,
    cells: String,
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

fn byte_len(grid: &GridSpec) -> Result<usize> {
    let cells = grid.cell_count();
    if cells > MAX_BOARD_CELLS {
        return Err(Error::InvalidGrid(format!(
            "{cells} cells exceed the board limit of {MAX_BOARD_CELLS}"
        )));
    }
    Ok(cells.div_ceil(8) as usize)
}

impl Checkerboard {
    /// Bit of cell `flat` in the board sampled with `(epsilon, seed)`. Reading
    /// a single bit this way agrees with [`Checkerboard::sample`].
    #[inline]
    pub fn sampled_bit(epsilon: f64, seed: u64, flat: u64) -> bool {
        rng::bernoulli(seed, flat, epsilon)
    }

    /// Samples `ω_ε^n`: one Bernoulli(`epsilon`) draw per cell from a stream
    /// keyed by `(seed, flat index)`.
    pub fn sample(grid: GridSpec, epsilon: f64, seed: u64) -> Result<Self> {
        check_probability(epsilon)?;
        let len = byte_len(&grid)?;
        let cells = grid.cell_count();
        let mut bits = vec![0u8; len];
        bits.par_chunks_mut(SAMPLE_CHUNK_BYTES)
            .enumerate()
            .for_each(|(chunk, bytes)| {
                let base = (chunk * SAMPLE_CHUNK_BYTES * 8) as u64;
                for (b, byte) in bytes.iter_mut().enumerate() {
                    for bit in 0..8u64 {
                        let flat = base + b as u64 * 8 + bit;
                        if flat < cells && Self::sampled_bit(epsilon, seed, flat) {
                            *byte |= 1 << bit;
                        }
                    }
                }
            });
        Ok(Self {
            grid,
            epsilon,
            seed,
            bits,
        })
    }

    /// A hand-built board containing exactly `cells`. Its provenance records
    /// `epsilon` as the resulting measure and seed 0.
    pub fn from_cells<'a>(
        grid: GridSpec,
        cells: impl IntoIterator<Item = &'a CellIndex>,
    ) -> Result<Self> {
        let mut bits = vec![0u8; byte_len(&grid)?];
        for cell in cells {
            if cell.dim() != grid.d() || cell.coords().iter().any(|&c| c == 0 || c > grid.n()) {
                return Err(Error::InvalidGrid(format!("cell {cell} is not in the grid")));
            }
            let flat = grid.flat_index(cell);
            bits[(flat / 8) as usize] |= 1 << (flat % 8);
        }
        let mut board = Self {
            grid,
            epsilon: 0.0,
            seed: 0,
            bits,
        };
        board.epsilon = board.measure();
        Ok(board)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Raw bit array in flat-index order, little-endian within bytes.
    pub fn bytes(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn bit(&self, flat: u64) -> bool {
        self.bits[(flat / 8) as usize] >> (flat % 8) & 1 == 1
    }

    pub fn contains(&self, cell: &CellIndex) -> bool {
        self.bit(self.grid.flat_index(cell))
    }

    pub fn popcount(&self) -> u64 {
        self.bits.iter().map(|b| b.count_ones() as u64).sum()
    }

    /// Lebesgue measure `|ω|` of the domain.
    pub fn measure(&self) -> f64 {
        self.popcount() as f64 / self.grid.cell_count() as f64
    }

    pub fn is_empty(&self) -> bool {
        self.popcount() == 0
    }

    pub fn is_full(&self) -> bool {
        self.popcount() == self.grid.cell_count()
    }

    pub fn to_document(&self) -> String {
        let doc = BoardDocument {
            d: self.grid.d(),
            n: self.grid.n(),
            epsilon: self.epsilon,
            seed: self.seed,
            cells: BASE64.encode(&self.bits),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("board document serializes");
        text.push('\n');
        text
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let doc: BoardDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("board document: {e}")))?;
        let grid = GridSpec::new(doc.d, doc.n)?;
        check_probability(doc.epsilon)?;
        let bits = BASE64
            .decode(doc.cells.as_bytes())
            .map_err(|e| Error::Parse(format!("board cells: {e}")))?;
        let len = byte_len(&grid)?;
        if bits.len() != len {
            return Err(Error::Parse(format!(
                "board cells hold {} bytes, expected {len}",
                bits.len()
            )));
        }
        let tail = grid.cell_count() % 8;
        if tail != 0 && bits[len - 1] >> tail != 0 {
            return Err(Error::Parse("padding bits past the last cell are set".into()));
        }
        Ok(Self {
            grid,
            epsilon: doc.epsilon,
            seed: doc.seed,
            bits,
        })
    }
}
