//! Class decomposition of planar geodesics and line separations of point
//! sets.

mod separation;
mod signature;

pub use separation::{
    count_bound, enumerate_separations, separations_bruteforce, PointSet, SeparationFamily,
    BRUTEFORCE_MAX_POINTS,
};
pub use signature::{
    census_growth, class_signature, classes_polynomial_census, vertex_separation, CensusGrowth,
    CensusReport, ClassSignature, Vertex, VertexSeparation,
};
