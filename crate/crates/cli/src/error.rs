use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { message: String, line: Option<usize> },

    #[error("invalid config value `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Model(#[from] opo_qtraj::Error),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "config_parse",
            CliError::Validation { .. } => "config_validation",
            CliError::Io { .. } => "io",
            CliError::Model(e) => e.category(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Model(_) => 1,
        }
    }

    /// `{"error": {"category", "message", ...}}` for stderr.
    pub fn to_json(&self) -> Value {
        let mut body = json!({ "category": self.category(), "message": self.to_string() });
        match self {
            CliError::Parse { line: Some(l), .. } => body["line"] = json!(l),
            CliError::Validation { key, .. } => body["key"] = json!(key),
            _ => {}
        }
        json!({ "error": body })
    }
}
