use std::path::Path;

use ampforge_core::Error as CoreError;
use thiserror::Error;

/// Failure classes shared by the CLI (exit codes) and the service (HTTP status).
#[derive(Debug, Error)]
pub enum ShellError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("sample-rate mismatch: {0}")]
    RateMismatch(String),
    #[error("unknown model: {0}")]
    UnknownModel(String),
    #[error("unknown clip: {0}")]
    UnknownClip(String),
    #[error("unknown ir: {0}")]
    UnknownIr(String),
    #[error("parse failure: {0}")]
    Parse(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("bad audio: {0}")]
    BadAudio(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("filterbank mismatch: {0}")]
    FilterbankMismatch(String),
}

impl ShellError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            ShellError::NotFound(path.display().to_string())
        } else {
            ShellError::Io(format!("{}: {e}", path.display()))
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            ShellError::Io(_) => 1,
            ShellError::NotFound(_) | ShellError::UnknownClip(_) | ShellError::UnknownIr(_) => 2,
            ShellError::RateMismatch(_) => 3,
            ShellError::UnknownModel(_) => 4,
            ShellError::Parse(_) | ShellError::Invalid(_) => 5,
            ShellError::BadAudio(_) => 6,
            ShellError::NonFinite(_) => 7,
            ShellError::FilterbankMismatch(_) => 8,
        }
    }

    pub fn http_status(&self) -> u16 {
        match self {
            ShellError::Parse(_) | ShellError::Invalid(_) => 400,
            ShellError::NotFound(_) | ShellError::UnknownModel(_) | ShellError::UnknownClip(_) | ShellError::UnknownIr(_) => 404,
            ShellError::FilterbankMismatch(_) => 409,
            ShellError::RateMismatch(_) | ShellError::BadAudio(_) => 422,
            ShellError::Io(_) | ShellError::NonFinite(_) => 500,
        }
    }
}

impl From<CoreError> for ShellError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::SampleRateMismatch { .. } => ShellError::RateMismatch(msg),
            CoreError::UnknownModel(id) => ShellError::UnknownModel(id),
            CoreError::FilterbankMismatch => ShellError::FilterbankMismatch(msg),
            CoreError::Json(_) | CoreError::UnsupportedFormatVersion(_) | CoreError::BlockCount(_) => ShellError::Parse(msg),
            CoreError::UnsupportedWav { .. }
            | CoreError::Wav(_)
            | CoreError::LengthMismatch { .. }
            | CoreError::Misaligned { .. }
            | CoreError::Empty(_)
            | CoreError::TooShort { .. } => ShellError::BadAudio(msg),
            CoreError::NonFinite(_) | CoreError::NonFiniteBlock { .. } | CoreError::Diverged(_) => ShellError::NonFinite(msg),
            CoreError::InvalidSpec(_) | CoreError::InvalidParams(_) | CoreError::IndexOutOfRange { .. } => ShellError::Invalid(msg),
        }
    }
}
