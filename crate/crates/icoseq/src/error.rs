use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid axis index {0} (expected 0..=2)")]
    InvalidAxis(usize),
    #[error("site {site} out of range for {n} spins")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("spin count {0} exceeds maximum {1}")]
    TooManySpins(usize, usize),
    #[error("matrix is not Hermitian (max |M - M\u{2020}| = {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not a proper rotation")]
    NotARotation,
    #[error("axis is not a unit vector (|axis| = {0})")]
    NonUnitAxis(f64),
    #[error("pair indices must satisfy a < b < N, got a={a}, b={b}, N={n}")]
    BadPairIndices { a: usize, b: usize, n: usize },
    #[error("group closure exceeded the cap of {0} elements")]
    ClosureCapExceeded(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("linear program is infeasible{0}")]
    Infeasible(String),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("no nonzero durations in solution")]
    EmptySolution,
    #[error("sequence is not cyclic (pulse product deviates from identity by {0:.3e})")]
    NotCyclic(f64),
    #[error("pulse axis not representable after planar splitting")]
    NotRepresentable,
    #[error("pure-z rotation axis cannot be realized off-resonantly (n1 = 0)")]
    PureZAxis,
    #[error("coincident spin positions at indices {0} and {1}")]
    CoincidentPositions(usize, usize),
    #[error("{0}")]
    InvalidInput(String),
    #[error("no detectable rotation in the input series")]
    NoRotation,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
