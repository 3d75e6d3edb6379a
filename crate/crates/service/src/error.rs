use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

/// Body of every non-success response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub correlation_id: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn unauthenticated(message: &str) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthenticated", message)
    }

    pub fn invalid_credentials() -> Self {
        Self::new(
            StatusCode::UNAUTHORIZED,
            "invalid-credentials",
            "user id or secret is wrong",
        )
    }

    pub fn forbidden() -> Self {
        Self::new(
            StatusCode::FORBIDDEN,
            "role-forbidden",
            "your role may not use this endpoint",
        )
    }

    pub fn internal() -> Self {
        Self::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            "internal error",
        )
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid-request", message)
    }
}

impl From<csanno::Error> for ApiError {
    fn from(e: csanno::Error) -> Self {
        use csanno::Error as E;
        let (status, code) = match &e {
            E::UnknownLabel { .. }
            | E::MissingTag { .. }
            | E::Parse(_)
            | E::MalformedLine { .. }
            | E::DuplicateId { .. } => (StatusCode::BAD_REQUEST, "invalid-request"),
            E::InvalidUnit { .. }
            | E::InvalidAnnotation { .. }
            | E::Schema { .. }
            | E::QuizLength { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid-annotation"),
            E::Incomplete { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "incomplete"),
            E::Unauthorized { .. } => (StatusCode::FORBIDDEN, "not-task-owner"),
            E::StaleTask { .. } => (StatusCode::CONFLICT, "stale-task"),
            E::IllegalTransition { .. } => (StatusCode::CONFLICT, "illegal-transition"),
            E::NotReady(_) => (StatusCode::CONFLICT, "not-ready"),
            E::State(_) | E::EmptyPool => (StatusCode::CONFLICT, "conflict"),
            E::NotFound(_) => (StatusCode::NOT_FOUND, "not-found"),
            E::Config(_) => (StatusCode::BAD_REQUEST, "invalid-request"),
            E::InvalidMatrix(_)
            | E::Alignment { .. }
            | E::CsPointsMismatch { .. }
            | E::Log { .. }
            | E::Io(_)
            | E::Json(_) => {
                tracing::error!(error = %e, "internal failure");
                return ApiError::internal();
            }
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let correlation_id = uuid::Uuid::new_v4().to_string();
        if self.status.is_server_error() {
            tracing::error!(%correlation_id, code = self.code, "{}", self.message);
        } else {
            tracing::info!(%correlation_id, code = self.code, "{}", self.message);
        }
        let header = HeaderValue::from_str(&correlation_id).expect("uuid is a valid header");
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
            correlation_id,
        };
        let mut resp = (self.status, Json(body)).into_response();
        resp.headers_mut().insert("x-correlation-id", header);
        resp
    }
}
