use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};
use triagebase::error::{IngestError, LifecycleError, ScoringError};
use triagebase::project::ProjectError;

/// An error response: `{"error": message, "details": ...}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            details: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(d) = self.details {
            body["details"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<ProjectError> for ApiError {
    fn from(e: ProjectError) -> Self {
        let message = e.to_string();
        match e {
            ProjectError::UnknownFormat { known, .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, message).with_details(json!({ "known": known }))
            }
            ProjectError::Ingest(IngestError::Invalid(issues) | IngestError::NoValidEntries(issues)) => {
                ApiError::bad_request(message).with_details(json!({ "issues": issues }))
            }
            ProjectError::Ingest(IngestError::UnknownAdapter { known, .. }) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, message).with_details(json!({ "known": known }))
            }
            ProjectError::Ingest(_) => ApiError::bad_request(message),
            ProjectError::DuplicateReport(_) | ProjectError::OutOfOrder { .. } => ApiError::new(StatusCode::CONFLICT, message),
            ProjectError::NotFound(_)
            | ProjectError::Lifecycle(LifecycleError::UnknownFinding(_))
            | ProjectError::Scoring(ScoringError::UnknownAggregate(_)) => ApiError::not_found(message),
            ProjectError::Lifecycle(LifecycleError::DisappearedNotAssignable) => ApiError::new(StatusCode::FORBIDDEN, message),
            ProjectError::Scoring(_) => ApiError::bad_request(message),
            ProjectError::Rules { .. } | ProjectError::Kb(_) => {
                tracing::error!(error = %message, "write failed");
                ApiError::internal(message)
            }
        }
    }
}
