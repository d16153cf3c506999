use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unusable config or inputs it points at. Exit status 2.
    #[error("invalid config: {0}")]
    Config(String),

    /// Numerical input rejected by the library while setting up an
    /// experiment. Exit status 2.
    #[error("invalid input: {0}")]
    Core(#[from] rrde::Error),

    /// Writing outputs failed. Exit status 2.
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}
