use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config field `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("config field `{path}` = {value} violates `{rule}`")]
    Invalid {
        path: String,
        rule: String,
        value: f64,
    },
    #[error(transparent)]
    Core(#[from] yamabe_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{verb}: failed checks: {}", failed.join(", "))]
    ChecksFailed { verb: String, failed: Vec<String> },
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for rejected input, 3 for numerical failures, 1 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Schema { .. } | LabError::Invalid { .. } => 2,
            LabError::Core(e) if e.is_validation() => 2,
            LabError::Core(_) | LabError::ChecksFailed { .. } => 3,
            LabError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Schema { .. } => "schema",
            LabError::Invalid { .. } => "invalid_parameter",
            LabError::Core(e) => e.kind(),
            LabError::Io { .. } => "io",
            LabError::ChecksFailed { .. } => "checks_failed",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        match self {
            LabError::Schema { path, .. } => v["path"] = json!(path),
            LabError::Invalid { path, rule, value } => {
                v["path"] = json!(path);
                v["rule"] = json!(rule);
                v["value"] = json!(value);
            }
            LabError::ChecksFailed { failed, .. } => v["failed"] = json!(failed),
            _ => {}
        }
        v
    }
}
