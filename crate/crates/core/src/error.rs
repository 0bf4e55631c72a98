use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::ItemId;
use crate::session::Phase;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Wire-level error taxonomy shared by the engine, the API and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Validation,
    Phase,
    Conflict,
    Authorization,
    NotFound,
    StaleTarget,
    Corruption,
    UpstreamAdapter,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Validation => "validation",
            ErrorCode::Phase => "phase",
            ErrorCode::Conflict => "conflict",
            ErrorCode::Authorization => "authorization",
            ErrorCode::NotFound => "not_found",
            ErrorCode::StaleTarget => "stale_target",
            ErrorCode::Corruption => "corruption",
            ErrorCode::UpstreamAdapter => "upstream_adapter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {0} is outside the score range [0, 10]")]
    OutOfRange(String),
    #[error("{0}")]
    Validation(String),
    #[error("`{op}` is not permitted in phase {phase}")]
    Phase { op: &'static str, phase: Phase },
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Authorization(String),
    #[error("{0}")]
    NotFound(String),
    #[error("edit targets unknown item `{0}`")]
    StaleTarget(ItemId),
    #[error("journal corrupt at seq {seq:?}: {message}")]
    Corruption { seq: Option<u64>, message: String },
    #[error("journal is terminated; no further events may be appended")]
    Terminated,
    #[error("journal storage failure: {0}")]
    Storage(String),
    #[error("response line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("adapter failure: {0}")]
    Upstream(String),
}

impl Error {
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::OutOfRange(_) | Error::Validation(_) => ErrorCode::Validation,
            Error::Phase { .. } | Error::Terminated => ErrorCode::Phase,
            Error::Conflict(_) => ErrorCode::Conflict,
            Error::Authorization(_) => ErrorCode::Authorization,
            Error::NotFound(_) => ErrorCode::NotFound,
            Error::StaleTarget(_) => ErrorCode::StaleTarget,
            Error::Corruption { .. } | Error::Storage(_) => ErrorCode::Corruption,
            Error::Parse { .. } | Error::Upstream(_) => ErrorCode::UpstreamAdapter,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn corruption(seq: impl Into<Option<u64>>, msg: impl Into<String>) -> Self {
        Error::Corruption { seq: seq.into(), message: msg.into() }
    }
}
