use std::path::PathBuf;

use thiserror::Error;

/// Which bounding-box constraint a candidate violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("bbox value is not finite")]
    NotFinite,
    #[error("x must lie in (0, 1)")]
    X,
    #[error("y must lie in (0, 1)")]
    Y,
    #[error("width must lie in (0, 1)")]
    Width,
    #[error("height must lie in (0, 1)")]
    Height,
    #[error("x + w must be smaller than 1")]
    Right,
    #[error("y + h must be smaller than 1")]
    Bottom,
    #[error("bbox needs exactly 4 values, got {0}")]
    Arity(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("scene graph has no objects")]
    NoObjects,
    #[error("object at position {0} has an empty id")]
    EmptyId(usize),
    #[error("duplicate object id {0:?}")]
    DuplicateId(String),
    #[error("object {0:?} has an empty category")]
    EmptyCategory(String),
    #[error("object {0:?} has no layout")]
    MissingLayout(String),
    #[error("object {id:?} has an invalid layout: {source}")]
    InvalidLayout { id: String, source: LayoutError },
    #[error("relation references unknown object id {0:?}")]
    DanglingRelation(String),
    #[error("relation on {0:?} points at itself")]
    SelfRelation(String),
    #[error("relation between {0:?} and {1:?} has an empty predicate")]
    EmptyRelation(String, String),
    #[error("group references unknown object id {0:?}")]
    DanglingGroupMember(String),
    #[error("caption is empty")]
    EmptyCaption,
    #[error("object list is empty")]
    EmptyObjectList,
    #[error("object list entry {0} is empty")]
    EmptyObjectListEntry(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: Box<ClientError> },
    #[error("no recorded response for request {0}")]
    CassetteMiss(String),
}

impl ClientError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, ClientError::Transport(_) | ClientError::Timeout)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("no JSON value found in response")]
    NoJson { raw: String },
    #[error("response is missing required field {field:?}")]
    MissingField { field: &'static str, raw: String },
    #[error("field {field:?} has unexpected shape: {detail}")]
    BadField { field: &'static str, detail: String },
    #[error("layout entry {index} ({object:?}) is invalid: {source}")]
    InvalidBox { index: usize, object: String, source: LayoutError },
    #[error("layout entry names {0:?}, which matches no object in the scene")]
    Unbound(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("export failed for sample {sample}: {reason}")]
    Export { sample: String, reason: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }

    /// Operator mistakes (bad flags, bad config, invalid input documents) as
    /// opposed to environment failures (IO, clients).
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Layout(_)
                | Error::Validation(_)
                | Error::Parse(_)
                | Error::Argument(_)
                | Error::Config(_)
                | Error::Json { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
