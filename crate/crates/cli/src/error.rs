use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {path}: {reason}")]
    Config { path: String, reason: String },

    #[error("{operation} failed: {source}")]
    Execution {
        operation: String,
        #[source]
        source: intervalkit::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exec(operation: impl Into<String>) -> impl FnOnce(intervalkit::Error) -> Self {
        let operation = operation.into();
        move |source| CliError::Execution { operation, source }
    }
}
