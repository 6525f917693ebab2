use thiserror::Error;

/// Errors raised anywhere in the forecasting stack.
///
/// Every variant maps to a stable dotted class tag through [`Error::class`],
/// which the command-line frontend prints on failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("duplicate timestamp {timestamp} at row {row}")]
    DuplicateTimestamp { row: usize, timestamp: i64 },

    #[error("irregular spacing at row {row}: expected {expected}s between samples, found {found}s")]
    IrregularSpacing { row: usize, expected: i64, found: i64 },

    #[error("gap of {len} missing values starting at row {row} exceeds fill limit of {max}")]
    MissingGap { row: usize, len: usize, max: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("empty result: {0}")]
    Empty(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("causality violation: {0}")]
    Causality(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("invalid feature spec: {0}")]
    Spec(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("config references unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("config parse: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("target is zero at index {index}; relative error undefined")]
    ZeroTarget { index: usize },

    #[error("loss contract violated: {0}")]
    LossContract(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("insufficient history for columns: {}", columns.join(", "))]
    InsufficientHistory { columns: Vec<String> },

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("model checksum mismatch: file is corrupt or truncated")]
    Checksum,

    #[error("malformed model file: {0}")]
    Format(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("fitting {component} model: {source}")]
    Component {
        component: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Machine-parseable class tag, e.g. `data.irregular_spacing`.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Csv(_) => "data.csv",
            Error::MissingColumn(_) => "schema.missing_column",
            Error::DuplicateTimestamp { .. } => "data.duplicate_timestamp",
            Error::IrregularSpacing { .. } => "data.irregular_spacing",
            Error::MissingGap { .. } => "data.missing_gap",
            Error::Data(_) => "data.invalid",
            Error::Empty(_) => "data.empty",
            Error::Range(_) => "data.range",
            Error::Parameter(_) => "param.invalid",
            Error::Shape { .. } => "shape.mismatch",
            Error::Causality(_) => "feature.causality",
            Error::UnknownName(_) => "name.unknown",
            Error::Spec(_) => "config.feature_spec",
            Error::Config(_) => "config.invalid",
            Error::UnknownFeature(_) => "config.unknown_feature",
            Error::ConfigParse(_) => "config.parse",
            Error::ZeroTarget { .. } => "metric.zero_target",
            Error::LossContract(_) => "loss.contract",
            Error::Schema(_) => "schema.mismatch",
            Error::InsufficientHistory { .. } => "feature.insufficient_history",
            Error::Version { .. } => "model.version",
            Error::Checksum => "model.checksum",
            Error::Format(_) => "model.format",
            Error::Json(_) => "model.format",
            Error::Component { source, .. } => source.class(),
        }
    }

    pub(crate) fn in_component(self, component: &'static str) -> Error {
        Error::Component {
            component,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape {
            what,
            expected,
            found,
        })
    }
}
