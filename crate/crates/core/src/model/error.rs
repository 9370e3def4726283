use thiserror::Error;

/// Structured validation failure for syllabus and profile documents.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("duplicate lesson id {id:?} in unit {unit}, first seen in unit {first_unit}")]
    DuplicateLessonId {
        id: String,
        unit: usize,
        first_unit: usize,
    },
    #[error("empty unit: {0}")]
    EmptyUnit(String),
    #[error("non-contiguous index: {0}")]
    NonContiguousIndex(String),
    #[error("availability window {window}: {window_minutes} minutes is shorter than the {segment_minutes}-minute segment")]
    WindowTooShort {
        window: usize,
        window_minutes: u32,
        segment_minutes: u32,
    },
    #[error("profile has no availability windows")]
    NoAvailability,
    #[error("invalid {field}: {reason}")]
    InvalidField { field: String, reason: String },
}

impl ModelError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::InvalidField {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for ModelError {
    fn from(err: serde_json::Error) -> Self {
        Self::Parse(err.to_string())
    }
}
