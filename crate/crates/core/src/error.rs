use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sphere dimension {0}: only n = 1 and n = 2 are supported")]
    InvalidDimension(usize),

    #[error("resolution too small: {0}")]
    ResolutionTooSmall(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("{what} must be positive, found {value} at node {node}")]
    NonPositive {
        what: &'static str,
        node: usize,
        value: f64,
    },

    #[error("body is not strictly convex: smallest principal radius {min_eigenvalue:e} <= tolerance {tolerance:e}")]
    NotConvex { min_eigenvalue: f64, tolerance: f64 },

    #[error("sigma_{k} is not positive at node {node} (value {value:e})")]
    SigmaKNonPositive { k: usize, node: usize, value: f64 },

    #[error("invalid curvature order k = {k} for n = {n}")]
    InvalidOrder { k: usize, n: usize },

    #[error("regularization parameter {0} outside (0, 0.25]")]
    EpsilonOutOfRange(f64),

    #[error("case/parameter mismatch: {0}")]
    CaseMismatch(String),

    #[error("divergent quadrature: {0}")]
    DivergentQuadrature(String),

    #[error("function is not increasing: {0}")]
    NotIncreasing(String),

    #[error("bandwidth {bandwidth} invalid: {reason}")]
    Bandwidth { bandwidth: f64, reason: String },

    #[error("measure is concentrated on a closed hemisphere (min_plus = {min_plus:e})")]
    HemisphereConcentrated { min_plus: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid flow specification: {0}")]
    InvalidSpec(String),

    #[error("flow collapsed at t = {t:e} (dt = {dt:e}); failing node {node}")]
    Collapse { t: f64, dt: f64, node: usize },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("width bound violated: {0}")]
    WidthBound(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
