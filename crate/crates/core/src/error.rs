use alloc::string::String;

use thiserror::Error;

use crate::model::Phase;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a label set needs at least 2 labels, got {0}")]
    TooFewLabels(usize),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("confidence {value} outside 1..={max}")]
    ConfidenceOutOfRange { value: u32, max: u32 },
    #[error("secondary label equals primary label `{0}`")]
    SecondaryEqualsPrimary(String),
    #[error("duplicate annotation for sample `{sample}` by `{annotator}` in phase `{phase}`")]
    DuplicateAnnotation {
        sample: String,
        annotator: String,
        phase: Phase,
    },
    #[error("sample `{sample}`: {reason}")]
    SampleOverlap { sample: String, reason: String },
    #[error("duplicate sample id `{0}`")]
    DuplicateSample(String),
    #[error("invalid campaign parameters: {0}")]
    InvalidParams(String),
    #[error("no paired labels to compare")]
    EmptyPairs,
    #[error("annotators `{0}` and `{1}` share no samples")]
    NoSharedSamples(String, String),
    #[error("unknown annotator `{0}`")]
    UnknownAnnotator(String),
    #[error("annotator `{0}` shares no double-annotated samples with anyone")]
    IsolatedAnnotator(String),
    #[error("need at least {required} annotators, got {actual}")]
    TooFewAnnotators { required: usize, actual: usize },
    #[error("annotator `{0}` has no intra-annotator agreement but lambda > 0")]
    MissingIntra(String),
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("reliability {value} of annotator `{annotator}` is not positive")]
    NonPositiveReliability { annotator: String, value: f64 },
    #[error("sample pool holds {available} ids but the plan needs {required}")]
    InsufficientSamples { required: usize, available: usize },
    #[error("expected 1 or 2 labels to aggregate, got {0}")]
    AggregateArity(usize),
    #[error("aggregation weight {0} is not positive")]
    InvalidWeight(f64),
    #[error("label mapping: {0}")]
    InvalidMapping(String),
    #[error("invalid soft label: {0}")]
    InvalidSoftLabel(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("training data covers fewer than 2 classes")]
    SingleClass,
    #[error("missing reliability for annotator `{0}`")]
    MissingReliability(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
