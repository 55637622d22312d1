use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use policy_compass::elicitation::SessionError;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// The closed set of error codes the API returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Unknown session or indicator.
    NotFound,
    /// `expected_version` is stale; `details` holds `expected` and `actual`.
    VersionConflict,
    /// The request was well-formed but broke a model rule; `details` holds
    /// the full error from the core library.
    ValidationFailed,
    /// The body or query could not be decoded.
    BadRequest,
    /// Persistence or another server-side failure.
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::VersionConflict => StatusCode::CONFLICT,
            ErrorCode::ValidationFailed => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), details: None }
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).ok();
        self
    }

    pub fn session_not_found(id: &str) -> Self {
        Self::new(ErrorCode::NotFound, format!("no session `{id}`"))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let code = match &e {
            SessionError::VersionConflict { .. } => ErrorCode::VersionConflict,
            SessionError::UnknownIndicator { .. } => ErrorCode::NotFound,
            _ => ErrorCode::ValidationFailed,
        };
        ApiError::new(code, e.to_string()).with_details(&e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}
