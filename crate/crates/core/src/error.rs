//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by grid construction, solvers, and the optimizer.
#[derive(Debug, Error)]
pub enum Error {
    /// A nodal field does not match the grid it is used with.
    #[error("length mismatch: expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Grid resolution below the minimum the stencils support.
    #[error("grid too coarse: need at least 4 cells, got {0}")]
    GridTooCoarse(usize),

    /// Bad grid parameter (non-positive final time, zero time steps, ...).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A nodal value is NaN or infinite.
    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    /// A field that must satisfy homogeneous Dirichlet conditions does not.
    #[error("field does not vanish on the boundary (node {node}: {value:e})")]
    BoundaryNotZero { node: usize, value: f64 },

    /// The diffusion coefficient must be strictly positive everywhere.
    #[error("coefficient not strictly positive (node {node}: {value:e})")]
    NonPositiveCoefficient { node: usize, value: f64 },

    /// The coefficient violates its declared admissible bounds.
    #[error("coefficient outside admissible set: {0}")]
    Inadmissible(String),

    /// Negative noise fraction.
    #[error("noise fraction must be non-negative, got {0}")]
    NegativeNoise(f64),

    /// Bad optimizer or experiment configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Conjugation coefficient undefined because the previous gradient is zero.
    #[error("previous gradient has zero norm; conjugation coefficient undefined")]
    ZeroGradient,

    /// The search direction is identically zero; no step can be taken.
    #[error("descent direction is identically zero")]
    ZeroDirection,

    /// Degenerate inputs to a closed-form stability quantity.
    #[error("degenerate stability inputs: {0}")]
    DegenerateInput(String),

    /// I/O failure while reading or writing experiment files.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A node-value file could not be parsed or does not match the grid.
    #[error("invalid input file: {0}")]
    InvalidFile(String),

    /// Internal failure that indicates a bug (e.g. a singular banded system
    /// that the positivity preconditions should have excluded).
    #[error("internal solver failure: {0}")]
    Internal(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
