use thiserror::Error;

/// Errors raised anywhere in the verification pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singularity: {0}")]
    Singularity(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("unbound parameter `{0}`")]
    UnboundParam(String),

    #[error("degenerate transformation: {0}")]
    Degenerate(String),

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown case `{id}`{}", .suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownCase {
        id: String,
        suggestion: Option<String>,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("config line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
