//! CLI error categories mapped onto exit codes: 0 ok, 1 configuration,
//! 2 numeric (including singular-field conditions).

use dissicorr_core::CoreError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Numeric(String),
    Singular(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numeric(_) | CliError::Singular(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Config(m) => write!(f, "CONFIG: {m}"),
            CliError::Numeric(m) => write!(f, "NUMERIC: {m}"),
            CliError::Singular(m) => write!(f, "SINGULAR: {m}"),
            CliError::Io(m) => write!(f, "CONFIG: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NumericalOverflow { .. } | CoreError::Underflow { .. } => {
                CliError::Numeric(e.to_string())
            }
            CoreError::SingularCotangent { .. }
            | CoreError::SingularField { .. }
            | CoreError::SingularCorrection { .. }
            | CoreError::DegenerateConditions => CliError::Singular(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
