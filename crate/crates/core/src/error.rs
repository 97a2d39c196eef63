use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StarkError {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("potential minimum is not unique: sites at s = {first} and s = {second}")]
    NonUniqueMinimum { first: f64, second: f64 },
    #[error("curvature at the leftmost boundary point is {kappa}, expected > 0")]
    NonPositiveCurvature { kappa: f64 },
    #[error("(s, t) = ({s}, {t}) lies outside the validated tubular patch")]
    OutOfPatch { s: f64, t: f64 },
    #[error("argument {value} outside the supported range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("patch depth {depth} is below 5 h^(2/3) = {required}")]
    PatchTooShallow { depth: f64, required: f64 },
    #[error("jacobian weight {value} is not positive at node ({i}, {j})")]
    WeightNonPositive { i: usize, j: usize, value: f64 },
    #[error("Shortley-Weller arm of length {arm} at node {node} is degenerate")]
    DegenerateArm { node: usize, arm: f64 },
    #[error("eigensolver did not converge after {iterations} iterations (smallest residual reached {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("inner linear solve did not converge: {0}")]
    InnerSolve(String),
    #[error("shifted operator is not positive definite")]
    ShiftNotDefinite,
    #[error("Ritz value {re} + {im}i has a non-negligible imaginary part")]
    ComplexRitzValue { re: f64, im: f64 },
    #[error("quasimode cutoff scale {scale} exceeds the patch extent {extent}")]
    ScaleOverflow { scale: f64, extent: f64 },
    #[error("vector length {got} does not match the operator grid ({expected})")]
    GridMismatch { expected: usize, got: usize },
    #[error("q F = {0} must be positive")]
    NonPositiveField(f64),
    #[error("only {kept} residuals lie above the noise floor, need at least 3")]
    ResidualBelowNoise { kept: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, StarkError>;
