use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use teamharness_core::scoring::ScoringError;
use teamharness_core::workspace::api::ApiErrorBody;
use teamharness_core::workspace::WorkspaceError;

/// Workspace failures mapped onto HTTP statuses with a JSON body.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ApiErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, error: impl Into<String>) -> Self {
        Self {
            status,
            body: ApiErrorBody {
                error: error.into(),
                violations: Vec::new(),
                current_version: None,
            },
        }
    }
}

impl From<WorkspaceError> for ApiError {
    fn from(e: WorkspaceError) -> Self {
        let message = e.to_string();
        match e {
            WorkspaceError::UnknownRun(_) | WorkspaceError::UnknownSession(_) | WorkspaceError::UnknownResponse(_) => {
                ApiError::new(StatusCode::NOT_FOUND, message)
            }
            WorkspaceError::VersionConflict { current, .. } => {
                let mut err = ApiError::new(StatusCode::CONFLICT, message);
                err.body.current_version = Some(current);
                err
            }
            WorkspaceError::Scoring(ScoringError::RubricViolation(violations)) => {
                let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "score sheet violates the rubric");
                err.body.violations = violations;
                err
            }
            WorkspaceError::Scoring(ScoringError::UnknownCase(_)) => ApiError::new(StatusCode::NOT_FOUND, message),
            WorkspaceError::Scoring(ScoringError::Ledger(_)) => ApiError::new(StatusCode::CONFLICT, message),
            WorkspaceError::Scoring(ScoringError::InvalidInput(_)) => ApiError::new(StatusCode::BAD_REQUEST, message),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
