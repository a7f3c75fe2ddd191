use thiserror::Error;

/// Errors raised by the library. Every variant corresponds to an input that
/// violates a documented precondition; none of them signal internal bugs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("negative probability {value} at flat index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, which deviates from 1 by more than 1e-9")]
    NotNormalized { sum: f64 },

    #[error("bad coordinate set {coords:?} for a distribution with {k} coordinates")]
    BadCoordinate { coords: Vec<usize>, k: usize },

    #[error("arity mismatch: {left} vs {right} coordinates")]
    ArityMismatch { left: usize, right: usize },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("value {value} lies outside the domain [{lo}, {hi}]")]
    DomainViolation { value: f64, lo: f64, hi: f64 },

    #[error("coordinates are not mutually independent (max deviation {deviation:e})")]
    NotIndependent { deviation: f64 },

    #[error("invalid phi: {0}")]
    InvalidPhi(String),

    #[error("expected a bipartite distribution, got {k} coordinates")]
    NotBipartite { k: usize },

    #[error("coordinate {coord} has fewer than two symbols of positive probability")]
    DegenerateMarginal { coord: usize },

    #[error("bad lambda point: {0}")]
    BadLambda(String),

    #[error("distribution is not generic (smallest singular value {sigma_min:e})")]
    NonGeneric { sigma_min: f64 },

    #[error("bad shape: {0}")]
    BadShape(String),

    #[error("not a correlation matrix: {0}")]
    NotCorrelationMatrix(String),

    #[error("grid of {points} points exceeds the cap of 1e7")]
    GridTooLarge { points: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
