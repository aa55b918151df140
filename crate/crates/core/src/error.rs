use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("covariance factorization failed after jitter retry")]
    Factorization,
    #[error("Green's function singular at zero distance")]
    Singular,
    #[error("window quadrature needs {needed} nodes, cap is {cap}")]
    TooManyNodes { needed: usize, cap: usize },
    #[error("degenerate kernel: H equals h/2")]
    Degenerate,
    #[error("no viable anchor for the recursive estimate")]
    NoAnchor,
    #[error("unknown {field}: {value}")]
    Unknown { field: &'static str, value: String },
    #[error("bad format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
