use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("energy is undefined at the location of station {0}")]
    AtStation(usize),
    #[error("station index {index} out of range for a network of {len} stations")]
    StationIndex { index: usize, len: usize },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("the zero polynomial has no finite root count")]
    ZeroPolynomial,
    #[error("empty interval: the lower end must lie strictly below the upper end")]
    EmptyInterval,
    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("beta must exceed 1 for this operation")]
    BetaTooSmall,
    #[error("station {0} shares its location with another station")]
    DegenerateZone(usize),
    #[error("this operation requires uniform powers")]
    NonUniform,
    #[error("two stations, no noise and beta = 1: zones are unbounded half-planes")]
    TrivialNetwork,
    #[error("epsilon must lie strictly between 0 and 1")]
    Epsilon,
    #[error("invalid bounding box or resolution: {0}")]
    Raster(String),
    #[error("radius bound violated along a ray: {0}")]
    BoundsViolation(String),
    #[error("boundary tracing failed: {0}")]
    Inconsistent(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported format version {0}")]
    Version(u64),
    #[error("checksum mismatch")]
    Checksum,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
