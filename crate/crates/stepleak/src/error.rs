//! Error handling shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model construction, input validation, and the numeric
/// routines.
///
/// The three variants deliberately mirror how a front end should report
/// failures: [`Error::InvalidModel`] and [`Error::InvalidInput`] are
/// configuration mistakes (a CLI maps them to exit code 2), while
/// [`Error::NumericDomain`] marks requests outside the mathematical domain
/// of an operation (exit code 3).
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The system description itself is malformed: dimension mismatch,
    /// non-finite entries, negative noise variance, non-positive sample
    /// period, and similar.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An argument to an operation is malformed: wrong series length, empty
    /// candidate set, bias table not covering the horizon, and similar.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request is outside the mathematical domain of the operation:
    /// zero noise variance where a bound is requested, a change time at or
    /// past the horizon, a shift out of range, a state matrix that is not
    /// diagonalizable to working precision, or a Monte Carlo guard
    /// violation.
    #[error("numeric domain error: {0}")]
    NumericDomain(String),
}
