//! Random checkerboards on the periodic grid, straight-line geodesics across
//! them, and the occupation-time statistics of those geodesics.

pub mod classes;
pub mod ell;
pub mod error;
pub mod experiment;
pub mod geodesic;
pub mod grid;
pub mod largedev;
pub mod render;
pub mod rng;
pub mod stats;

pub use ell::{dense_sweep, ell_monotone_check, estimate_ell, CandidatePolicy, EllEstimate};
pub use error::{Error, Result};
pub use geodesic::{occupation, occupation_time, reduce_horizon, traverse, Geodesic, Traversal};
pub use grid::{CellIndex, Checkerboard, GridSpec};
