use std::fmt;

/// Failure of a CLI run, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config, data file or unwritable output (exit 2).
    #[error("{0}")]
    Input(String),
    /// A numerical method failed on valid input (exit 3).
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn input(msg: impl fmt::Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Numerical(_) => "numerical",
        }
    }

    /// One line of JSON for standard error.
    pub fn to_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        serde_json::json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": msg }).to_string()
    }
}

impl From<bff_core::Error> for CliError {
    fn from(e: bff_core::Error) -> Self {
        use bff_core::Error as E;
        match e.root() {
            E::Domain(_) | E::Contract(_) => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
