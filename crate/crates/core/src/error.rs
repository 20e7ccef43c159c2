use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("feature {feature} is out of range for {n_players} players")]
    FeatureOutOfRange { feature: usize, n_players: usize },

    #[error("feature {feature} is already a member of the coalition")]
    FeatureInCoalition { feature: usize },

    #[error("exact enumeration over {n_players} players exceeds the ceiling of {ceiling}")]
    TooManyPlayers { n_players: usize, ceiling: usize },

    #[error("missing stratum mean for feature {feature}, coalition size {size}")]
    MissingStratum { feature: usize, size: usize },

    #[error("chromosomes disagree on focal feature or cardinality")]
    ChromosomeMismatch,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("evaluation set is empty")]
    EmptyEvaluation,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: String },

    #[error("signal of length {len} is shorter than the required {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("signal contains non-finite samples")]
    NonFiniteSignal,

    #[error("found {found} R-peaks, need at least 3")]
    TooFewPeaks { found: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },

    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    NonNumeric { line: usize, column: String, value: String },

    #[error("no label column in header")]
    MissingLabelColumn,

    #[error("malformed record: {0}")]
    MalformedRecord(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by a failure while
    /// running a valid request.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::FeatureOutOfRange { .. }
                | Error::TooManyPlayers { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonFinite { .. }
                | Error::EmptyInput(_)
                | Error::RaggedRow { .. }
                | Error::NonNumeric { .. }
                | Error::MissingLabelColumn
                | Error::MalformedRecord(_)
                | Error::Csv(_)
        )
    }
}
