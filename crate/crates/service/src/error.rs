use std::path::{Path, PathBuf};

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use icutl_core::cohort::CohortError;
use icutl_core::datastore::{IngestError, QueryError};
use icutl_core::riskmodel::RiskModelError;
use icutl_core::synthgen::SynthError;
use serde::Serialize;
use thiserror::Error;

/// JSON error body: `{"code": ..., "message": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = icutl_core::json::to_canonical_string(&self).expect("error serializes");
        (self.status, [(axum::http::header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

impl From<CohortError> for ApiError {
    fn from(e: CohortError) -> Self {
        match e {
            CohortError::InvalidRange { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidRange", e.to_string()),
            CohortError::NegativeAge => Self::internal(e.to_string()),
        }
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let code = match e {
            QueryError::UnknownAdmission(_) => "UnknownAdmission",
            QueryError::UnknownStay(_) => "UnknownStay",
        };
        Self::new(StatusCode::NOT_FOUND, code, e.to_string())
    }
}

impl From<RiskModelError> for ApiError {
    fn from(e: RiskModelError) -> Self {
        match e {
            RiskModelError::Schema(_) | RiskModelError::DimensionMismatch { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "SchemaViolation", e.to_string())
            }
            _ => Self::internal(e.to_string()),
        }
    }
}

/// Command-line failures; printed as one `error <code>: <message>` line.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Model(#[from] RiskModelError),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("server: {0}")]
    Server(std::io::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Ingest(e) => e.code(),
            CliError::Synth(SynthError::InvalidConfig(_)) | CliError::Config(_) => "InvalidConfig",
            CliError::Synth(SynthError::Io { .. }) | CliError::Io { .. } => "IoError",
            CliError::Model(RiskModelError::Schema(_)) => "SchemaViolation",
            CliError::Model(_) => "TrainingFailed",
            CliError::Server(_) => "ServerError",
        }
    }

    /// Single line, safe to parse: newlines in messages are flattened.
    pub fn line(&self) -> String {
        format!("error {}: {}", self.code(), self.to_string().replace(['\n', '\r'], " "))
    }
}
