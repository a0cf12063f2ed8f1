use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("extent {length} is not a positive integer multiple of the mesh width {h}")]
    NonconformingExtent { length: f64, h: f64 },
    #[error("unsupported base dimension {0} (expected 1 or 2)")]
    BadDimension(usize),
    #[error("no lattice node lies in the requested region")]
    EmptyRegion,
    #[error("contact angle {theta} rad is outside (0, pi) or below the sine floor {sin_min}")]
    InvalidAngle { theta: f64, sin_min: f64 },
    #[error("capillary gauge is undefined at the zero vector")]
    ZeroVector,
    #[error("field and problem live on different lattices")]
    ShapeMismatch,
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dirichlet data must cover exactly the dirichlet nodes: {0}")]
    DirichletCoverage(String),
    #[error("linear solver stagnated after {iterations} iterations (relative residual {residual:e})")]
    LinearSolveFailure { iterations: usize, residual: f64 },
    #[error("degenerate coefficient state: {0}")]
    DegenerateState(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("point {0:?} is outside the source lattice")]
    OutOfExtent(Vec<f64>),
    #[error("data family breaks the scenario hypothesis: {0}")]
    HypothesisViolation(String),
    #[error("angle {theta} rad is outside the admissible range for n = {n}")]
    AngleOutOfRange { n: usize, theta: f64 },
    #[error("energy decreased along perturbation {trial} at amplitude {epsilon:e} by {drop:e}")]
    StationarityViolation { trial: usize, epsilon: f64, drop: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
