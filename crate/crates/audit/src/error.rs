use std::path::PathBuf;

use recaudit_core::source::SourceError;

/// Every failure a subcommand can report, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} is locked by another writer")]
    Locked(PathBuf),
    #[error("{0} already exists; pass --overwrite to replace it")]
    AlreadyExists(PathBuf),
    #[error("bundle: {0}")]
    Bundle(#[from] crate::bundle::BundleError),
    #[error("fetch: {0}")]
    Fetch(#[from] SourceError),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(message: impl std::fmt::Display) -> Self {
        AppError::Data(message.to_string())
    }

    pub fn config(message: impl std::fmt::Display) -> Self {
        AppError::Config(message.to_string())
    }

    /// 1 usage or config, 2 data or invariant, 3 source fetch.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) | AppError::Config(_) => 1,
            AppError::Fetch(_) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Usage(_) => "usage",
            AppError::Config(_) => "config",
            AppError::Data(_) => "data",
            AppError::Io { .. } => "io",
            AppError::Locked(_) => "locked",
            AppError::AlreadyExists(_) => "already_exists",
            AppError::Bundle(_) => "bundle",
            AppError::Fetch(_) => "fetch",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
