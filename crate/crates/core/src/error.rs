use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain interior is not connected ({components} components)")]
    DomainNotConnected { components: usize },

    #[error("field contains non-finite values")]
    InvalidField,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("energy became non-finite at iteration {iter}")]
    Diverged { iter: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
