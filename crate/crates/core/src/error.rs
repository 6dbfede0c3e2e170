use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter outside its domain: {0}")]
    ParameterDomain(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("covariance matrix is not positive definite: {0}")]
    InvalidCovariance(String),

    #[error("nonstationary parameters: |phi| = {0} must be < 1")]
    Nonstationary(f64),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("insufficient draws: {0}")]
    InsufficientDraws(String),

    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),

    #[error("degenerate chain: {0}")]
    DegenerateChain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid data at line {line}: {msg}")]
    DataValidation { line: usize, msg: String },

    #[error("dividend yield {value} in period {period} is not positive; its log is undefined")]
    LogDomain { period: String, value: f64 },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("study aborted: {failed} of {total} replications failed")]
    StudyFailed { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by bad input data or configuration rather
    /// than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::ParameterDomain(_)
                | Error::InvalidCovariance(_)
                | Error::Nonstationary(_)
                | Error::Parse { .. }
                | Error::DataValidation { .. }
                | Error::LogDomain { .. }
                | Error::Config(_)
                | Error::InsufficientData(_)
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
