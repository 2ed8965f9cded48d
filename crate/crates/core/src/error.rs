use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid of {n}^{d} cells does not fit in the cell index type")]
    DimensionTooLarge { d: usize, n: u64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid geodesic: {0}")]
    InvalidGeodesic(String),
    #[error("geodesic lies inside a grid hyperplane")]
    GammaHGeodesic,
    #[error("horizon {0} is outside (0, 1)")]
    HorizonOutOfRange(f64),
    #[error("horizon {0} is not a positive number")]
    NonpositiveHorizon(f64),
    #[error("traversal and checkerboard live on different grids")]
    GridMismatch,
    #[error("geodesic touches the grid skeleton")]
    SkeletonTouch,
    #[error("dimension {d} is not supported here")]
    DimensionUnsupported { d: usize },
    #[error("points {first} and {second} coincide")]
    DuplicatePoints { first: usize, second: usize },
    #[error("{count} points exceed the limit of {max}")]
    TooManyPoints { count: usize, max: usize },
    #[error("invalid weighted-sum specification: {0}")]
    InvalidSpec(String),
    #[error("{m} variables exceed the exact-enumeration limit of {max}")]
    TooManyVariables { m: usize, max: usize },
    #[error("degenerate decay fit: {0}")]
    DegenerateFit(String),
    #[error("invalid candidate policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("trial {trial} at n = {n} (seed {seed}) failed: {source}")]
    TrialFailed {
        n: u64,
        trial: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error stems from bad user input rather than a failure
    /// during computation or I/O.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io(_) | Error::TrialFailed { .. } | Error::DegenerateFit(_)
        )
    }
}
