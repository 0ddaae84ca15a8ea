use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use kitrobot_core::diag::Diagnostic;
use kitrobot_core::scenario::ScenarioError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("no such session")]
    NotFound,
    #[error("{0}")]
    Conflict(&'static str),
    #[error("{message}")]
    Invalid {
        message: String,
        agent: Option<String>,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Invalid { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn diagnostics(diagnostics: Vec<Diagnostic>) -> Self {
        ApiError::Invalid {
            message: "invalid program graph".to_string(),
            agent: None,
            diagnostics,
        }
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        let message = e.to_string();
        match e {
            ScenarioError::Program { agent, diagnostics, .. } => ApiError::Invalid {
                message,
                agent: Some(agent),
                diagnostics,
            },
            ScenarioError::UnknownAgent(agent)
            | ScenarioError::DuplicateProgram(agent)
            | ScenarioError::Unbound(agent) => ApiError::Invalid {
                message,
                agent: Some(agent),
                diagnostics: Vec::new(),
            },
            ScenarioError::World(_) | ScenarioError::Catalog(_) => ApiError::BadRequest(message),
            ScenarioError::Io { .. } => ApiError::Internal(message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        let body = match &self {
            ApiError::Invalid {
                message,
                agent,
                diagnostics,
            } => json!({ "error": message, "agent": agent, "diagnostics": diagnostics }),
            other => json!({ "error": other.to_string() }),
        };
        (status, Json(body)).into_response()
    }
}
