use std::path::PathBuf;

use thiserror::Error;

use crate::engine::SimTime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("event scheduled in the past: due {due} < now {now}")]
    ScheduleInPast { due: SimTime, now: SimTime },

    #[error("message {msg_id} has {available} receiver records, {needed} recipients requested")]
    InsufficientTraceCoverage {
        msg_id: String,
        available: usize,
        needed: usize,
    },

    #[error("sender {0} has no messages in the trace")]
    UnknownSender(u32),

    #[error("targeted delay schedule has no entry for recipient {0}")]
    MissingTarget(u32),

    #[error("targeted delivery requires adversarial-delay powers")]
    TargetedNotPermitted,

    #[error("adversary action rejected: {0}")]
    AdversaryRule(String),

    #[error("no opportune epoch found in {0} draws")]
    NoOpportuneEpoch(u64),

    #[error("trace line {line}: {reason}")]
    MalformedTrace { line: u64, reason: String },

    #[error("trace line {line}: duplicate record for message `{msg_id}` and receiver {receiver}")]
    DuplicateTraceRecord {
        line: u64,
        msg_id: String,
        receiver: u32,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
