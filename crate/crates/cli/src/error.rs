use relsearch_core::graph::GraphError;
use relsearch_core::index::IndexError;
use relsearch_core::pipeline::PipelineError;
use relsearch_core::relex::RelexError;
use thiserror::Error;

/// Failure of a subcommand, split by exit code: 1 for bad configuration
/// (flags, missing paths, unknown classifier), 2 for bad or inconsistent data.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Io { .. } => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<RelexError> for CliError {
    fn from(e: RelexError) -> Self {
        match e {
            RelexError::Io { .. } | RelexError::ModelUnavailable(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::InvalidParams(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
