use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse failure at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("validation failure at {location}: {message}")]
    Validation { location: String, message: String },

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("unsatisfiable goal profile: {0}")]
    UnsatisfiableProfile(String),

    #[error("malformed dialog act string at offset {offset}: {message}")]
    ActParse { offset: usize, message: String },

    #[error("act references slot `{slot}` unknown to domain `{domain}`")]
    UnknownSlot { domain: String, slot: String },

    #[error("cannot generate an utterance for an empty act set")]
    EmptyActSet,

    #[error("parameter divergence detected (|w| = {max_abs:e})")]
    DivergenceDetected { max_abs: f64 },

    #[error("user goal has no sections")]
    EmptyGoal,

    #[error("environment stepped after the episode finished")]
    SteppedAfterDone,

    #[error("expected the {expected} to speak, got {got}")]
    WrongSpeaker { expected: String, got: String },

    #[error("unknown component `{0}`")]
    UnknownComponent(String),

    #[error("component `{0}` is already registered")]
    DuplicateName(String),

    #[error("conflicting agent slots: {0}")]
    SlotConflict(String),

    #[error("missing agent slot: {0}")]
    MissingSlot(String),

    #[error("inner product needs equal lengths, got {agents} agents and {envs} envs")]
    ShapeMismatch { agents: usize, envs: usize },

    #[error("incompatible components: {0}")]
    Incompatible(String),

    #[error("component failure in episode {episode}, turn {turn}: {source}")]
    ComponentFailure {
        episode: usize,
        turn: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("session {session} failed: {source}")]
    SessionFailure {
        session: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("search space is empty")]
    EmptySearchSpace,

    #[error("checkpoint schema hash {found} does not match active ontology {expected}")]
    SchemaMismatch { expected: String, found: String },

    #[error("unknown agent config `{0}`")]
    UnknownConfig(String),

    #[error("unknown chat session `{0}`")]
    UnknownSession(String),

    #[error("chat session `{0}` is closed")]
    SessionClosed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn validation(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { location: location.into(), message: message.into() }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), message: message.into() }
    }

    pub(crate) fn from_json(location: impl std::fmt::Display, err: serde_json::Error) -> Self {
        Error::Parse {
            location: format!("{location}:{}:{}", err.line(), err.column()),
            message: err.to_string(),
        }
    }
}
