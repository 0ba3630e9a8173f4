use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("triple {0} lies outside the domain [1, {1}]")]
    OutOfDomain(String, u32),

    #[error("rule `{0}` has an empty extension")]
    InvalidRule(String),

    #[error("invalid hypothesis space: {0}")]
    InvalidSpace(String),

    #[error("rule `{0}` is not in the catalog")]
    UnknownRule(String),

    #[error("contradiction: no hypothesis is consistent with the observed data")]
    Contradiction,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("could not extract a triple from model reply: {0}")]
    Extraction(String),

    #[error("llm transport failed after {attempts} attempt(s): {detail}")]
    LlmTransport { attempts: u32, detail: String },

    #[error("llm protocol error: {0}")]
    LlmProtocol(String),

    #[error("session `{0}` not found")]
    NotFound(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("persistence failure: {0}")]
    Persistence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
