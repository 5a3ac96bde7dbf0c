use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Validation(String),

    #[error("row {row}: field `{field}`: {message}")]
    MalformedRow { row: usize, field: String, message: String },

    #[error("duplicate id {0}")]
    DuplicateId(u64),

    #[error("{0}: input is empty")]
    EmptyInput(String),

    /// Two collections that must cover the same ids do not.
    #[error("id sets differ; only in left: {only_left:?}, only in right: {only_right:?}")]
    IdMismatch { only_left: Vec<u64>, only_right: Vec<u64> },

    #[error("backend `{backend}` unavailable: {message}")]
    Transport { backend: String, message: String },

    #[error("backend `{backend}` does not support head `{head}`")]
    Capability { backend: String, head: String },

    #[error("augmentation failed: {0}")]
    AugmentationFailure(String),

    #[error("augmentation aborted: {failed} of {attempted} backtranslations failed")]
    AugmentationAborted { failed: usize, attempted: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for exit codes and log fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input, bad config, broken invariant.
    Validation,
    /// Backend failure, transport failure or missing capability.
    Backend,
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn transport(backend: impl Into<String>, message: impl ToString) -> Self {
        Error::Transport {
            backend: backend.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Transport { .. }
            | Error::Capability { .. }
            | Error::AugmentationFailure(_)
            | Error::AugmentationAborted { .. } => ErrorKind::Backend,
            _ => ErrorKind::Validation,
        }
    }

    /// Builds an [`Error::IdMismatch`] from two sorted id lists.
    pub(crate) fn id_mismatch<'a>(
        left: impl IntoIterator<Item = &'a u64>,
        right: impl IntoIterator<Item = &'a u64>,
    ) -> Self {
        use std::collections::BTreeSet;
        let l: BTreeSet<u64> = left.into_iter().copied().collect();
        let r: BTreeSet<u64> = right.into_iter().copied().collect();
        Error::IdMismatch {
            only_left: l.difference(&r).copied().collect(),
            only_right: r.difference(&l).copied().collect(),
        }
    }
}
