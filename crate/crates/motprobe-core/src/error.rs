//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by simulation and estimation operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its documented invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Geometry cannot be integrated (e.g. non-positive sensing shell).
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    /// Schedule precondition violated (ordering, bounds, sampling).
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    /// Expected count rate is negative or non-finite.
    #[error("invalid rate: {0}")]
    InvalidRate(String),
    /// Data admit no fit (constant samples, zero amplitude).
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    /// Data violate a fit precondition (e.g. nothing above background).
    #[error("invalid data: {0}")]
    InvalidData(String),
    /// Optimizer exhausted its iteration budget.
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    /// A step-analysis segment contains no samples.
    #[error("empty segment: {0}")]
    EmptySegment(String),
    /// A serialized time series could not be parsed.
    #[error("series parse error: {0}")]
    SeriesParse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
