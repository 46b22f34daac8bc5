use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The `Display` output is a single line so that the CLI can forward it
/// verbatim as a machine-parsable error record.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("invalid level: factor `{factor}` has cardinality {cardinality}, got level {level}")]
    InvalidLevel {
        factor: String,
        cardinality: usize,
        level: usize,
    },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),
    #[error("divergence: objective became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("unknown baseline `{0}` (expected one of STL, RMTL, FEDA, MTFL, GOMTL)")]
    UnknownBaseline(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("invalid rank: {0}")]
    InvalidRank(String),
    #[error("empty evaluation: {0}")]
    EmptyEvaluation(String),
    #[error("unsupported schema: {0}")]
    UnsupportedSchema(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("loader error: {0}")]
    Loader(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::InvalidLabel(_) => "invalid-label",
            Error::InvalidLevel { .. } => "invalid-level",
            Error::InvalidSchema(_) => "invalid-schema",
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::Config(_) => "config",
            Error::DegenerateDomain(_) => "degenerate-domain",
            Error::Divergence { .. } => "divergence",
            Error::Singular(_) => "singular",
            Error::UnknownBaseline(_) => "unknown-baseline",
            Error::Conflict(_) => "conflict",
            Error::InvalidRank(_) => "invalid-rank",
            Error::EmptyEvaluation(_) => "empty-evaluation",
            Error::UnsupportedSchema(_) => "unsupported-schema",
            Error::ProtocolViolation(_) => "protocol-violation",
            Error::Parse { .. } => "parse",
            Error::EmptyDataset(_) => "empty-dataset",
            Error::Loader(_) => "loader",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
