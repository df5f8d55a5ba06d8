use alloc::string::String;

use crate::design::Violation;

/// Returned when an operation that requires a structurally valid tree is
/// handed one that is not.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid design tree: {0}")]
pub struct InvalidTree(pub Violation);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("duplicate component id `{0}`")]
    DuplicateId(String),
    #[error("component `{id}`: attribute `{name}` is not finite")]
    NonFinite { id: String, name: String },
    #[error("component `{id}`: attribute `{name}` must be > 0, got {value}")]
    NonPositive { id: String, name: String, value: f64 },
    #[error("component `{id}` is missing attribute `{name}`")]
    MissingAttribute { id: String, name: String },
    #[error("component `{id}` has unknown attribute `{name}`")]
    UnknownAttribute { id: String, name: String },
    #[error("unknown component id `{0}`")]
    UnknownId(String),
    #[error("layout needs at least {needed} {what}, configured {configured}")]
    LayoutTooNarrow {
        what: &'static str,
        needed: usize,
        configured: usize,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodecError {
    #[error(transparent)]
    InvalidTree(#[from] InvalidTree),
    /// Positions are 1-based token ordinals.
    #[error("unexpected key `{found}` at position {position}, expected {expected}")]
    UnexpectedKey {
        position: usize,
        found: String,
        expected: String,
    },
    #[error("sequence truncated at position {position}, expected {expected}")]
    Truncated { position: usize, expected: String },
    #[error("unexpected value `{value}` at position {position}, expected {expected}")]
    UnexpectedValue {
        position: usize,
        value: String,
        expected: String,
    },
    #[error("unknown value `{value}` at position {position}")]
    UnknownValue { position: usize, value: String },
    #[error("unknown value `{0}` in embedding vocabulary")]
    UnknownVocabulary(String),
    #[error("sequence of length {len} does not fit pad_to={pad_to}")]
    PadTooSmall { len: usize, pad_to: usize },
    #[error("empty token sequence")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{field}: probabilities sum to {sum}, expected 1")]
    NotNormalized { field: &'static str, sum: f64 },
    #[error("{field}: invalid probability {value}")]
    BadProbability { field: &'static str, value: f64 },
    #[error("{field}: expected {expected} weights, got {got}")]
    WrongLength {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field}: degenerate range ({min}, {max})")]
    DegenerateRange {
        field: &'static str,
        min: f64,
        max: f64,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurrogateError {
    #[error("input width {got} does not match model input_dim {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sequence length {len} exceeds max_seq_len {max}")]
    TooLong { len: usize, max: usize },
    #[error("sequence has no real (unmasked) positions")]
    EmptyMask,
    #[error("label {0} is not 0 or 1")]
    BadLabel(f64),
    #[error("batch has {inputs} sequences but {labels} labels")]
    LabelCount { inputs: usize, labels: usize },
    #[error("non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("dataset must be non-empty and contain both classes")]
    DegenerateDataset,
    #[error("catalog hash mismatch between model and catalog")]
    HashMismatch,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("dataset needs at least {min} designs, got {got}")]
    TooSmall { min: usize, got: usize },
    #[error("degenerate dataset: {0} split lacks one of the classes")]
    DegenerateDataset(&'static str),
    #[error("no threshold on the curve reaches recall {0}")]
    RecallUnattainable(f64),
    #[error("min_recall must be in (0, 1], got {0}")]
    BadRecallTarget(f64),
    #[error("minutes_per_eval must be > 0, got {0}")]
    BadMinutes(f64),
    #[error("sample size {requested} exceeds {available} kept designs")]
    SampleTooLarge { requested: usize, available: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    InvalidTree(#[from] InvalidTree),
}
