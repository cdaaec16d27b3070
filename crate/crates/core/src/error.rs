use thiserror::Error;

use crate::model::AgentId;

#[derive(Debug, Error)]
pub enum EfxError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("skeleton contains the triangle ({}, {}, {})", .0[0], .0[1], .0[2])]
    NotTriangleFree([AgentId; 3]),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A checked invariant or property failed inside the solver. Always a bug.
    #[error("internal error in {stage}: {detail}")]
    Internal { stage: &'static str, detail: String },

    #[error("search space too large: {size} exceeds guard {guard}")]
    SearchSpaceTooLarge { size: u128, guard: u128 },

    #[error("inconsistent generator spec: {0}")]
    InconsistentSpec(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl EfxError {
    pub(crate) fn internal(stage: &'static str, detail: impl Into<String>) -> Self {
        EfxError::Internal {
            stage,
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = EfxError> = std::result::Result<T, E>;
