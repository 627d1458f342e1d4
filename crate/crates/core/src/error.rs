//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Basis or dimension mismatch between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Time-slice index outside the staged sequence.
    #[error("slice index {index} out of range ({len} slices)")]
    SliceIndex { index: usize, len: usize },

    /// A pointer state (or ket) with zero norm where a normalizable state is required.
    #[error("state has zero norm")]
    ZeroNorm,

    /// Weak value requested for orthogonal pre/postselection.
    #[error("weak value undefined: postselected and preselected states are orthogonal (|<chi|psi>| = {overlap:.3e})")]
    UndefinedWeakValue { overlap: f64 },

    /// Observable cannot be spectrally decomposed for pointer coupling.
    #[error("spectral decomposition failed: {0}")]
    Spectral(String),

    /// Operator handed in as a projector is not idempotent.
    #[error("not a projector: {0}")]
    Projector(String),

    /// Postselection basis is not orthonormal/complete.
    #[error("invalid postselection basis: {0}")]
    Basis(String),

    /// No postselection direction satisfies the orthogonality condition.
    #[error("no postselection angle found for alpha = {alpha}: {reason}")]
    NoPostselection { alpha: f64, reason: String },

    /// Two-angle solver found no root in its scan domain.
    #[error("angle solver found no solution in the scan domain")]
    NoSolution,

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Coupling strength incompatible with the requested run mode.
    #[error("coupling g = {g} outside the '{mode}' regime for pointer width sigma = {sigma}")]
    Regime {
        mode: &'static str,
        g: f64,
        sigma: f64,
    },

    /// Scenario file could not be parsed.
    #[error("parse error at {key}: {reason}")]
    Parse { key: String, reason: String },

    /// Scenario file parsed but violates a structural invariant.
    #[error("validation failed at {key}: {reason}")]
    Validation { key: String, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
