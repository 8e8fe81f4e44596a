use thiserror::Error;

/// Errors raised by the library. Variants map one-to-one onto the failure
/// modes of the public operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("center is not an interior point of the ball (norm {norm})")]
    CenterNotInterior { norm: f64 },
    #[error("point lies outside the closed unit ball (norm {norm})")]
    PointOutsideBall { norm: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unitary part is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("lift does not preserve the form diag(1,..,1,-1) (residual {residual:e})")]
    NormalizationFailure { residual: f64 },
    #[error("eigenvalue problem is degenerate: {0}")]
    DegenerateEigenproblem(String),
    #[error("the polynomial is zero")]
    ZeroPolynomial,
    #[error("letter {letter} is outside the alphabet 1..={n}")]
    LetterOutOfRange { letter: usize, n: usize },
    #[error("size {size} exceeds the configured cap {cap}")]
    SizeOverflow { size: u128, cap: u128 },
    #[error("degree {degree} exceeds the configured cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },
    #[error("tuple is not a row contraction (row norm {norm})")]
    NotRowContractive { norm: f64 },
    #[error("matrix is not a contraction (norm {norm})")]
    NotContraction { norm: f64 },
    #[error("truncation level {level} is below the polynomial degree {degree}")]
    TruncationTooShallow { level: usize, degree: usize },
    #[error("delta {delta} must lie in (0, 1)")]
    DeltaOutOfRange { delta: f64 },
    #[error("point {index} has norm {norm} which is not below delta {delta}")]
    PointsNotInDeltaBall { index: usize, norm: f64, delta: f64 },
    #[error("word length {length} is below the minimum {min}")]
    WordTooShort { length: usize, min: usize },
    #[error("expected {expected} points, found {found}")]
    WrongPointCount { expected: usize, found: usize },
    #[error("no witness found after {tries} tries")]
    SearchExhausted { tries: usize },
    #[error("the point is fixed by the automorphism (residual {residual:e})")]
    PointIsFixed { residual: f64 },
    #[error("the off-diagonal entry c of the image of U is zero")]
    ZeroC,
    #[error("wrong shape: {0}")]
    WrongShape(String),
    #[error("hypothesis violated: z_{i} = phi(z_{j}) (distance {distance:e})")]
    HypothesisViolated { i: usize, j: usize, distance: f64 },
    #[error("the element lies in the ideal generated by U")]
    IsInIdeal,
    #[error("points too close to the sphere for a strict contraction (norm {norm})")]
    TooCloseToBoundary { norm: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
