use thiserror::Error;

/// Errors raised by the numerical contracts of this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violated a Hermiticity precondition.
    #[error("matrix is not Hermitian: max|A - A†| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    /// Input violated a density-matrix precondition.
    #[error("not a valid density matrix: {reason}")]
    NotDensity { reason: String },

    /// Operand shapes are incompatible.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// A state carried weight outside the one-excitation sector.
    #[error("sector projection rejected: weight {weight:.3e} outside the one-excitation span")]
    SectorLeakage { weight: f64 },

    /// The schedule derivative does not exist at the requested time.
    #[error("schedule derivative is singular at t = {t:.6e}")]
    SingularDerivative { t: f64 },

    /// Levels are too close for the requested spectral operation.
    #[error("degenerate levels at t = {t:.6e}: gap {gap:.3e} below {tolerance:.3e}")]
    Degeneracy { t: f64, gap: f64, tolerance: f64 },

    /// Frame-to-frame eigenvector matching could not be resolved.
    #[error("eigenstate tracking ambiguous at t = {t:.6e}; refine the time grid")]
    TrackingAmbiguity { t: f64 },

    /// Interpolation functions broke their boundary contract.
    #[error("schedule boundary contract violated: {context}")]
    ScheduleBoundary { context: String },

    /// An internal cross-check disagreed beyond its tolerance.
    #[error("numerical contract violated: {context}")]
    NumericalContract { context: String },

    /// A requested analysis window contained no samples.
    #[error("empty window: {context}")]
    EmptyWindow { context: String },

    /// Caller passed an argument outside the supported range.
    #[error("invalid argument: {context}")]
    InvalidArgument { context: String },

    /// The underlying dense eigensolver failed.
    #[error("eigensolver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
