use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix pair: {0}")]
    InvalidMatrixPair(String),

    #[error("matrix exponential overflow: |tB| = {norm:.3e} exceeds cap {cap:.3e}")]
    FlowOverflow { norm: f64, cap: f64 },

    #[error("adaptive quadrature exceeded depth {depth} on [{a}, {b}]")]
    QuadratureFailure { depth: usize, a: f64, b: f64 },

    #[error("invalid symbol family: {0}")]
    InvalidFamily(String),

    #[error("derivative order {requested} unavailable (family supplies up to {available})")]
    DerivOrderUnavailable { requested: usize, available: usize },

    #[error("ellipticity failure: inf over the unit sphere is {value:.3e} at T - t = {tau:.3e}")]
    EllipticityFailure { tau: f64, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "thickness condition fails at the upper bracket T = {horizon}: minimum {min_value:.4} below floor {floor}"
    )]
    ThresholdNotReached { horizon: f64, min_value: f64, floor: f64 },

    #[error("threshold bisection is not monotone: {0}")]
    NonMonotoneScenario(String),

    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:.3e}): {reason}")]
    CgStall {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("negative curvature {curvature:.3e} encountered at iteration {iteration}")]
    IndefiniteForm { iteration: usize, curvature: f64 },

    #[error("partition enumeration refused for m = {0} (limit 40)")]
    PartitionOverflow(usize),

    #[error("field container: {0}")]
    Container(String),
}

pub type Result<T> = std::result::Result<T, Error>;
