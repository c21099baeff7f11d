use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("insufficient data: need at least {required}, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("labels contain a single class ({class}); both classes are required")]
    SingleClassLabels { class: usize },

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("labels must be binary 0/1, found {0}")]
    NonBinaryLabels(usize),

    #[error("calibration holdout too small: need at least {required} rows, got {actual}")]
    HoldoutTooSmall { required: usize, actual: usize },

    #[error("group G={group} has no observations in the evaluation set")]
    EmptyGroup { group: u8 },

    #[error("no outcome-positive (Y=1) observations with G={group} in the evaluation set")]
    EmptyPositiveGroup { group: u8 },

    #[error("k={k} is too large for n={n} observations")]
    KTooLarge { k: usize, n: usize },

    #[error("unknown or invalid simulation spec: {0}")]
    UnknownSpec(String),

    #[error("invalid discrete distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),

    #[error("all candidate learners failed: {0}")]
    NoViableCandidate(String),
}
