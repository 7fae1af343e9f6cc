use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({p1}, {p2}) lies outside the chart disc of radius {radius}")]
    OutOfChart { p1: f64, p2: f64, radius: f64 },

    #[error("chart normalization violated: {0}")]
    Normalization(String),

    #[error("transversality |<Q,n>| < 1 violated: q0 = {q0}")]
    Transversality { q0: f64 },

    #[error("point ({u}, {v}) is outside the mesh domain")]
    OutsideDomain { u: f64, v: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("inadmissible variation direction: {0}")]
    InadmissibleDirection(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no branch expansion found (best normalized residual {best_residual})")]
    NoExpansion { best_residual: f64 },

    #[error("ambiguous square-root lifting at sample {index}")]
    AmbiguousLifting { index: usize },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
