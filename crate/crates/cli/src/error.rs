use serde_json::json;
use thermoprobe_core::montecarlo::checkpoint::CheckpointError;
use thermoprobe_core::Error as ModelError;

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Input/output failure outside the configuration.
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
/// Under-sampled results with `--strict`.
pub const EXIT_UNDERSAMPLED: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("checkpoint {path}: {source}")]
    Checkpoint { path: String, source: CheckpointError },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("output: {0}")]
    Output(String),
    #[error("{0} result(s) under-sampled")]
    Undersampled(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Checkpoint { .. } => EXIT_CONFIG,
            CliError::Model(e) if is_numerical(e) => EXIT_NUMERICAL,
            CliError::Model(_) => EXIT_CONFIG,
            CliError::Io(_) | CliError::Output(_) => EXIT_IO,
            CliError::Undersampled(_) => EXIT_UNDERSAMPLED,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            EXIT_CONFIG => "config",
            EXIT_NUMERICAL => "numerical",
            EXIT_UNDERSAMPLED => "undersampled",
            _ => "io",
        }
    }

    /// One-line record written to standard error on failure.
    pub fn record(&self) -> serde_json::Value {
        json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
    }
}

/// Errors a valid configuration can still run into.
fn is_numerical(e: &ModelError) -> bool {
    matches!(
        e,
        ModelError::NoConvergence(_)
            | ModelError::Critical
            | ModelError::OutsideDomain
            | ModelError::TangentPole(_)
            | ModelError::NotHermitian
            | ModelError::TooFewPoints { .. }
    )
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(ModelError::Critical).exit_code(), 3);
        assert_eq!(CliError::from(ModelError::EnumerationTooLarge { sites: 25, cap: 24 }).exit_code(), 2);
        assert_eq!(CliError::Undersampled(3).exit_code(), 4);
        let r = CliError::from(ModelError::OutsideDomain).record();
        assert_eq!(r["error"], "numerical");
        assert_eq!(r["exit_code"], 3);
    }
}
