use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    /// Thinning produced an acceptance probability above one: the rate bound is invalid.
    #[error("acceptance ratio {ratio} exceeds 1 (worker {worker:?}): rate bound is not an upper bound")]
    AcceptRatioExceeded { ratio: f64, worker: Option<usize> },

    #[error("reflection undefined for a zero gradient")]
    ZeroGradient,

    #[error("all proposals in round {round} are infinite")]
    AllInfinite { round: u64 },

    #[error("node {node} is not owned by worker {worker}")]
    NodeNotOwned { node: usize, worker: usize },

    #[error("epsilon {epsilon} must exceed log(1 + K/rho) = {threshold}")]
    InfeasibleEpsilon { epsilon: f64, threshold: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("proposal adaptation failed: acceptance rate {acceptance} outside [0.1, 0.5]")]
    AdaptationFailed { acceptance: f64 },

    #[error("reference chain too correlated: ESS {ess} below {required} for coordinate {coordinate}")]
    InsufficientEss {
        coordinate: usize,
        ess: f64,
        required: f64,
    },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("malformed data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attaches a worker id to an acceptance-ratio failure.
    pub fn with_worker(self, id: usize) -> Self {
        match self {
            Error::AcceptRatioExceeded { ratio, .. } => Error::AcceptRatioExceeded {
                ratio,
                worker: Some(id),
            },
            other => other,
        }
    }
}
