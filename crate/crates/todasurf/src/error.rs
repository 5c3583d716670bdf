//! Error types shared across the library.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input failed validation before any computation started.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The imaginary part of a period matrix is not positive definite.
    #[error("period matrix not admissible: {0}")]
    BadPeriodMatrix(String),

    /// A theta evaluation landed too close to the theta divisor for a
    /// quotient or logarithm to be trusted.
    #[error("theta value too close to zero: |theta| = {magnitude:.3e}, scale = {scale:.3e}")]
    NearThetaZero { magnitude: f64, scale: f64 },

    /// No truncation radius below the hard cap certifies the requested error.
    #[error("no certified truncation radius <= {cap} for eps = {eps:.3e}")]
    TruncationCap { cap: usize, eps: f64 },

    /// The spectral curve is degenerate (collided branch points etc.).
    #[error("degenerate spectral curve: {0}")]
    DegenerateCurve(String),

    /// A contour could not be routed safely around the branch points.
    #[error("contour construction failed: {0}")]
    ContourError(String),

    /// No admissible divisor was found in the search range.
    #[error("no admissible divisor found: {0}")]
    NoAdmissibleDivisor(String),

    /// The h-sign condition for the theta solution failed on the grid.
    #[error("h-sign condition violated: {0}")]
    SignCondition(String),

    /// A formal antiderivative does not exist in the differential ring.
    #[error("no exact antiderivative in the jet ring: {0}")]
    NotExact(String),

    /// A numeric quantity failed a consistency tolerance.
    #[error("numerical tolerance exceeded: {0}")]
    ToleranceExceeded(String),

    /// A spectral sample was requested away from the unit circle.
    #[error("spectral parameter off the unit circle: |lambda| = {0}")]
    OffUnitCircle(f64),

    /// An integration path runs through a masked grid point.
    #[error("integration path crosses a masked grid point: {0}")]
    MaskedPath(String),

    /// The induced metric is degenerate at a grid point.
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    /// The normal-frame determinant gamma_{1,1} degenerated at a point.
    #[error("degenerate normal frame: {0}")]
    FrameDegenerate(String),

    /// Eigenvalues of X collided, so the moving frame is not defined.
    #[error("eigenvalue collision: {0}")]
    EigenvalueCollision(String),

    /// Linear solve failed (singular system).
    #[error("singular linear system: {0}")]
    SingularSystem(String),

    /// IO / serialization failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Configuration parse failure.
    #[error("config error: {0}")]
    Config(String),
}

/// Convenience result alias.
pub type Result<T> = std::result::Result<T, Error>;
