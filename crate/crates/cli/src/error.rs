use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Solver(#[from] edgecast_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad input, 3 when an instance exceeds an enumeration cap,
    /// 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 2,
            CliError::Solver(e) if e.is_capacity() => 3,
            CliError::Solver(edgecast_core::Error::Invalid { .. }) => 2,
            _ => 1,
        }
    }
}
