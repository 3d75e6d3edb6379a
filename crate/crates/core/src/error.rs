use thiserror::Error;

use crate::tagschema::TagKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown {kind} label {label:?}")]
    UnknownLabel { kind: TagKind, label: String },

    #[error("token {index} has no CS tag")]
    MissingTag { index: usize },

    #[error("invalid unit {unit}: {reason}")]
    InvalidUnit { unit: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("line {line}: duplicate unit id {id:?}")]
    DuplicateId { line: usize, id: String },

    #[error("invalid agreement matrix: {0}")]
    InvalidMatrix(String),

    #[error("unit {unit}: annotators disagree on token count")]
    Alignment { unit: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("user {user} is not allowed to act on task {task}")]
    Unauthorized { user: String, task: String },

    #[error("task {task} was reassigned away from {user}")]
    StaleTask { user: String, task: String },

    #[error("incomplete annotation, missing tokens: {}", missing.join(", "))]
    Incomplete { missing: Vec<String> },

    #[error("illegal task transition {from} -> {to}")]
    IllegalTransition { from: String, to: String },

    #[error("batch {0} is not ready for review")]
    NotReady(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("gold pool is empty")]
    EmptyPool,

    #[error("expected {expected} quiz responses, got {got}")]
    QuizLength { expected: usize, got: usize },

    #[error("schema violation at {path}: {reason}")]
    Schema { path: String, reason: String },

    #[error("cs-points mismatch in unit {unit}")]
    CsPointsMismatch { unit: String },

    #[error("invalid annotation at {path}: {reason}")]
    InvalidAnnotation { path: String, reason: String },

    #[error("event log line {line}: {reason}")]
    Log { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
