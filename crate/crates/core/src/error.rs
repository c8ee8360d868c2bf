use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("target_size {target} too small: need at least {needed} entries for specials and the alphabet")]
    VocabTargetTooSmall { target: usize, needed: usize },

    #[error("max_len too small: {0} (need at least 3 for CLS, one token and SEP)")]
    MaxLenTooSmall(usize),

    #[error("unknown id {0}")]
    UnknownId(usize),

    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fully masked attention row")]
    FullyMaskedRow,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("d_model must be even for sinusoidal encoding (got {0})")]
    OddDModel(usize),

    #[error("sequence length {len} exceeds max_positions {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("nothing to mask")]
    NothingToMask,

    #[error("no negative candidate")]
    NoNegativeCandidate,

    #[error("corpus too small: need at least {needed} sentences, got {got}")]
    CorpusTooSmall { needed: usize, got: usize },

    #[error("unknown label {label:?} for task {task} (line {line})")]
    UnknownLabel {
        task: String,
        label: String,
        line: usize,
    },

    #[error("label {label:?} is not part of the task label set")]
    LabelNotInTask { label: String },

    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}:{line}: regression-valued label {label:?}; binary sentiment expects categorical labels")]
    RegressionLabel {
        path: PathBuf,
        line: usize,
        label: String,
    },

    #[error("label-set mismatch: {0}")]
    LabelSetMismatch(String),

    #[error("group_by_user requires a user id on every sample ({missing} samples have none)")]
    MissingUserIds { missing: usize },

    #[error("split fractions must be positive and sum to 1 (got {0:?})")]
    BadFractions([f64; 3]),

    #[error("prediction lists have different lengths: {pred} vs {gold}")]
    LengthMismatch { pred: usize, gold: usize },

    #[error("empty evaluation input")]
    EmptyEval,

    #[error("threshold must lie in [0, 1], got {0}")]
    BadThreshold(f64),

    #[error("empty dev set")]
    EmptyDevSet,

    #[error("empty user group")]
    EmptyUserGroup,

    #[error("unknown task {requested:?}; available: {available:?}")]
    UnknownTask {
        requested: String,
        available: Vec<String>,
    },

    #[error("corrupt checkpoint {path}: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },

    #[error("missing artifact {path}")]
    MissingArtifact { path: PathBuf },

    #[error("manifest error in {path}: {reason}")]
    BadManifest { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
