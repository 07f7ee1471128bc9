use thiserror::Error;

/// Failures of a CLI run, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or arguments.
    #[error("{0}")]
    Usage(String),

    /// The input violates a precondition; names the offending field.
    #[error("{field}: {message}")]
    Field { field: String, message: String },

    /// The input is well formed but rejected by the solver.
    #[error("{field}: {0}", field = precondition_field(.0))]
    Precondition(beckmann_core::Error),

    #[error("{0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        CliError::Field { field: field.to_string(), message: message.into() }
    }

    /// The instance field an error is about, when there is one.
    pub fn field_name(&self) -> Option<&str> {
        match self {
            CliError::Field { field, .. } => Some(field),
            CliError::Precondition(e) => Some(precondition_field(e)),
            _ => None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Field { .. } => "invalid-input",
            CliError::Precondition(_) => "precondition",
            CliError::Internal(_) => "internal",
            CliError::Io { .. } => "io",
        }
    }
}

impl From<beckmann_core::Error> for CliError {
    fn from(e: beckmann_core::Error) -> Self {
        if e.is_precondition() {
            CliError::Precondition(e)
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

fn precondition_field(e: &beckmann_core::Error) -> &'static str {
    use beckmann_core::Error as E;
    match e {
        E::DimensionMismatch { .. } | E::UnsupportedDimension { .. } => "dim",
        E::BarycenterMismatch { .. } => "nu",
        E::SubspacesNotComplementing { .. } | E::ResidualViolation { .. } => "v1",
        E::ProblemTooLarge { .. } => "mode",
        E::EmptyGrid | E::GridInfeasible { .. } => "grid",
        _ => "mu",
    }
}
