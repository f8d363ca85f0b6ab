//! Error type shared across the workspace.

use thiserror::Error;

/// Unified error type for simulator operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: left is {left}, right is {right}")]
    DimMismatch {
        context: &'static str,
        left: String,
        right: String,
    },

    #[error("shape mismatch for {name}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("distribution not normalized in {context}: sum = {sum}")]
    NotNormalized { context: &'static str, sum: f64 },

    #[error("support violation at index {index}: q is zero where p = {p}")]
    Support { index: usize, p: f64 },

    #[error("backward called without a recorded forward pass")]
    NoForward,

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("empty semantic state: every variable is disconnected in the causal graph")]
    EmptySemanticState,

    #[error("belief collapse: all hypothesis likelihoods are zero")]
    BeliefCollapse,

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("episode failed at step {step}: {source}")]
    Episode {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("checkpoint not found: {0}")]
    MissingCheckpoint(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
