use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("column `{column}` is not binary after mapping: {detail}")]
    NonBinaryAfterMapping { column: String, detail: String },

    #[error("no rows left after dropping {dropped} rows with missing values")]
    EmptyAfterCleaning { dropped: usize },

    #[error("invalid run configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] fairtl::Error),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}
