use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A link's power is too small to overcome ambient noise on its own,
    /// so its affectance coefficient is undefined.
    #[error("link ({sender}->{receiver}) power {power} cannot overcome noise")]
    SignalInsufficient {
        sender: usize,
        receiver: usize,
        power: f64,
    },

    #[error("links ({0}->{1}) and ({2}->{3}) share a node")]
    SharedNode(usize, usize, usize, usize),

    #[error("no power assigned to link ({0}->{1})")]
    MissingPower(usize, usize),

    #[error("instance too large: {0}")]
    TooLarge(String),

    /// A produced slot failed independent feasibility verification.
    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
