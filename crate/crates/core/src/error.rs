use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("discrete divergence {0:e} exceeds tolerance")]
    DivergenceTooLarge(f64),
    #[error("cube {0} lies outside the field grid")]
    CubeOutsideGrid(usize),
    #[error("field is not piecewise constant on cube {0}")]
    NotPiecewiseConstant(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("malformed field text: {0}")]
    Format(String),
    #[error("radius must be positive")]
    NonpositiveRadius,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error("gamma must be nonnegative, got {0}")]
    NegativeGamma(f64),
    #[error("gamma must be positive for the integral identity")]
    GammaZero,
    #[error("field strength b is negative at node {0}")]
    NegativeB(usize),
    #[error("fields live on different grids")]
    GridMismatch,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EffectiveFieldError {
    #[error("exponent p = {p} invalid in {dim}D (need p > {min})")]
    InvalidExponent { p: f64, dim: usize, min: f64 },
    #[error("lambda must be positive")]
    NonpositiveLambda,
    #[error("length cap must be positive")]
    InvalidCap,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("operator kind mismatch: expected {expected}, got {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("invalid operator parameters: {0}")]
    InvalidSpec(String),
    #[error("flux mu*Phi/hbar = {0} is not an integer")]
    NonIntegerFlux(f64),
    #[error("fields live on different grids")]
    GridMismatch,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("dimension {dim} exceeds dense cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("shift {shift:e} too close to an eigenvalue; perturb by about {suggested:e}")]
    ShiftTooCloseToEigenvalue { shift: f64, suggested: f64 },
    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("lambda {0} outside (0, 1)")]
    LambdaOutOfRange(f64),
    #[error("window holds {found} eigenvalues, more than max_count = {max}")]
    TooManyEigenvalues { found: usize, max: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("field strength must be positive")]
    NonpositiveField,
    #[error("lambda {0} outside (0, 1)")]
    LambdaOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TessellateError {
    #[error("cube side {0} larger than the region")]
    RTooLarge(f64),
    #[error("margin rho*r = {margin} resolved by {nodes:.2} nodes, need at least 4")]
    GridTooCoarseForMargin { margin: f64, nodes: f64 },
    #[error("rho must lie in (0, 1)")]
    InvalidRho,
    #[error("cube faces are not aligned with grid planes")]
    NotAligned,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
