//! Exit codes and the machine-readable error report.

use serde::Serialize;

/// Exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub exit_code: i32,
    pub kind: String,
    pub message: String,
    /// Residual history of a failed fixed-point search.
    #[serde(skip)]
    pub trace: Option<Vec<f64>>,
    /// Where the residual history was written.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { exit_code: EXIT_CONFIG, kind: "Config".into(), message: message.into(), trace: None, trace_file: None }
    }

    pub fn io(err: std::io::Error, what: &str) -> Self {
        Self { exit_code: EXIT_CONFIG, kind: "Io".into(), message: format!("{what}: {err}"), trace: None, trace_file: None }
    }
}

impl From<ptsm::Error> for CliError {
    fn from(e: ptsm::Error) -> Self {
        use ptsm::Error as E;
        let exit_code = match e {
            E::Validation(_)
            | E::InvalidD { .. }
            | E::SingularGamma0 { .. }
            | E::AsymmetricGamma1 { .. }
            | E::RankDeficientH
            | E::NotExponentiallyErgodic { .. } => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        };
        let trace = match &e {
            E::NoConvergence { trace, .. } => Some(trace.clone()),
            _ => None,
        };
        Self { exit_code, kind: e.kind().into(), message: e.to_string(), trace, trace_file: None }
    }
}
