//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors raised by the simulation and reconstruction routines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix that must be Hermitian deviates from its adjoint.
    #[error("matrix is not Hermitian (max deviation {deviation:.3e} exceeds tolerance {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    /// A vector that must have unit norm does not.
    #[error("vector is not unit-norm (norm {norm:.17e})")]
    NotUnit { norm: f64 },

    /// Internal consistency check of the spin-space rotation failed.
    #[error("rotated spin projection deviates from target by {deviation:.3e} (tolerance {tolerance:.3e})")]
    IdentityMismatch { deviation: f64, tolerance: f64 },

    /// Spectral projectors were requested for a matrix with (nearly) repeated eigenvalues.
    #[error("degenerate spectrum: eigenvalue gap {gap:.3e} below {threshold:.3e}; Vandermonde system is singular")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    /// A source matrix violates Hermiticity, positivity, or unit trace.
    #[error("invalid source matrix: {reason}")]
    InvalidSource { reason: String },

    /// Moments that do not correspond to any non-negative frequency table.
    #[error("moments are not realizable: frequency f({outcome}) = {value:.3e} is negative")]
    Infeasible { outcome: i8, value: f64 },

    /// An operation on event data received an empty log.
    #[error("event log is empty")]
    EmptyLog,

    /// An expansion coefficient came out with a non-negligible imaginary part.
    #[error("expansion coefficient {index} has imaginary part {imaginary:.3e}; source matrix is not Hermitian")]
    NonRealCoefficient { index: usize, imaginary: f64 },

    /// A matrix that must be positive semidefinite has a significant negative eigenvalue.
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    /// The measurement design does not determine the unknowns.
    #[error("singular design: {reason}")]
    SingularDesign { reason: String },

    /// A schedule was evaluated outside its tabulated domain.
    #[error("parameter {lambda} outside schedule domain [{min}, {max}]")]
    OutOfDomain { lambda: f64, min: f64, max: f64 },

    /// A trajectory has too few points for finite-difference diagnostics.
    #[error("need at least {needed} trajectory points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    /// A state vector that must be normalized is not.
    #[error("state vector is not normalized (norm {norm:.17e})")]
    NotNormalized { norm: f64 },

    /// The propagator lost unitarity beyond the per-step gate.
    #[error("propagator unitarity defect {defect:.3e} exceeds gate {gate:.3e} at lambda = {lambda}")]
    UnitarityLost { lambda: f64, defect: f64, gate: f64 },

    /// A text file does not match its expected format.
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    /// A dataset is empty where at least one record is required.
    #[error("dataset is empty")]
    EmptyDataset,

    /// Underlying I/O failure, wrapped with the offending path.
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
