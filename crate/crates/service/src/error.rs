use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use maat_core::MaatError;
use serde::Serialize;
use thiserror::Error;

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("service is not ready: no model loaded")]
    NotReady,
    #[error("unknown session {0}")]
    NotFound(String),
    #[error("session {0} is finished")]
    Finished(String),
    #[error("an idempotency token is required for every answer")]
    TokenRequired,
    #[error("answer is for step {got} but the session is at step {expected}")]
    StepMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Engine(#[from] MaatError),
    #[error("session store: {0}")]
    Store(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotReady => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Finished(_) | ServiceError::TokenRequired | ServiceError::StepMismatch { .. } => {
                StatusCode::CONFLICT
            }
            ServiceError::Engine(e) => match e {
                MaatError::Config(_)
                | MaatError::Validation(_)
                | MaatError::Capability { .. }
                | MaatError::Lookup { .. } => StatusCode::BAD_REQUEST,
                MaatError::PoolExhausted { .. } => StatusCode::CONFLICT,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
            ServiceError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::BadRequest(_) => "invalid_request",
            ServiceError::NotReady => "not_ready",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Finished(_) => "session_finished",
            ServiceError::TokenRequired => "idempotency_token_required",
            ServiceError::StepMismatch { .. } => "step_mismatch",
            ServiceError::Engine(MaatError::Capability { .. }) => "incompatible",
            ServiceError::Engine(MaatError::PoolExhausted { .. }) => "pool_exhausted",
            ServiceError::Engine(_) if self.status() == StatusCode::BAD_REQUEST => "invalid_request",
            ServiceError::Engine(_) | ServiceError::Store(_) => "internal",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            log::error!("{self}");
        }
        let body = ErrorBody {
            code: self.code(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

impl From<redb::Error> for ServiceError {
    fn from(e: redb::Error) -> Self {
        ServiceError::Store(e.to_string())
    }
}
