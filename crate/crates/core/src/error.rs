use thiserror::Error;

pub type Result<T> = std::result::Result<T, HawkesError>;

#[derive(Debug, Error)]
pub enum HawkesError {
    #[error("model is not subcritical: spectral radius {rho} >= 1 - {margin}")]
    Stability { rho: f64, margin: f64 },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("renewal iteration did not converge after {iterations} steps (last increment {increment:e})")]
    Convergence { iterations: usize, increment: f64 },

    #[error("order {n} exceeds the enabled limit {max}")]
    Size { n: usize, max: usize },

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("window error: {0}")]
    Window(String),

    #[error("event stream carries no lineage")]
    Lineage,

    #[error("no finite intensity bound: {0}")]
    Bound(String),

    #[error("cluster {cluster} exceeded the event cap of {cap}")]
    Explosion { cluster: u64, cap: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HawkesError {
    /// Process exit code for this error class. Zero and one are reserved for
    /// success and failed verification checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            HawkesError::Input(_) | HawkesError::Io(_) | HawkesError::Json(_) | HawkesError::Csv(_) => 2,
            HawkesError::Stability { .. } => 3,
            HawkesError::Degenerate(_) => 4,
            HawkesError::Convergence { .. } => 5,
            HawkesError::Size { .. } => 6,
            HawkesError::MalformedTree(_) => 7,
            HawkesError::Grid(_) => 8,
            HawkesError::Window(_) => 9,
            HawkesError::Lineage => 10,
            HawkesError::Bound(_) => 11,
            HawkesError::Explosion { .. } => 12,
        }
    }
}
