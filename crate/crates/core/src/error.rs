use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid filterbank spec: {0}")]
    InvalidSpec(String),

    #[error("index {index} out of range for {len} filters")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("sample-rate mismatch: expected {expected} Hz, found {found} Hz")]
    SampleRateMismatch { expected: f64, found: f64 },

    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("filterbank mismatch: models do not share one filterbank spec")]
    FilterbankMismatch,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("input of {len} samples is shorter than one analysis frame of {frame}")]
    TooShort { len: usize, frame: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("non-finite intermediate in block {block} ({stage})")]
    NonFiniteBlock { block: usize, stage: &'static str },

    #[error("unsupported model format_version {0}")]
    UnsupportedFormatVersion(u32),

    #[error("model must have exactly 6 blocks, found {0}")]
    BlockCount(usize),

    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unsupported wav format (format tag {tag:#06x}, {bits} bits)")]
    UnsupportedWav { tag: u16, bits: u16 },

    #[error("malformed wav: {0}")]
    Wav(String),

    #[error("alignment check failed: target is offset by {lag} samples")]
    Misaligned { lag: i64 },

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("training diverged: {0}")]
    Diverged(String),
}
