use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {0} is not finite")]
    NonFinite(f64),

    #[error("mapping for representation `{expected}` cannot convert a `{found}` view")]
    RepresentationMismatch { expected: String, found: String },

    #[error("mapping scale must be non-zero")]
    ZeroScale,

    #[error("{0} requires at least one value")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("incomplete answers: source `{source_id}` has no answer for question `{question_id}`")]
    MissingAnswer {
        source_id: String,
        question_id: String,
    },

    #[error("duplicate answer from source `{source_id}` for question `{question_id}`")]
    DuplicateAnswer {
        source_id: String,
        question_id: String,
    },

    #[error("duplicate question `{0}`")]
    DuplicateQuestion(String),

    #[error("question `{0}` has no ground truth")]
    MissingGroundTruth(String),

    #[error("no prior profile supplied for source `{0}`")]
    MissingPrior(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("growth rate undefined for `{view}` in {year}: previous level is zero")]
    ZeroBase { view: String, year: i32 },

    #[error("cannot fill gap for `{view}` in {year}: no previous growth rate")]
    UnfillableGap { view: String, year: i32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
