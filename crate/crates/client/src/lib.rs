//! Thin async client for the KitRobot HTTP service.

use std::collections::BTreeMap;

use kitrobot_core::diag::Diagnostic;
use kitrobot_core::vm::TraceRecord;
use reqwest::{Response, StatusCode};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    /// 422: the input was understood but is invalid.
    #[error("{message}")]
    Invalid {
        message: String,
        agent: Option<String>,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("server returned {status}: {message}")]
    Status { status: StatusCode, message: String },
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Http(e) => e.status(),
            ClientError::Invalid { .. } => Some(StatusCode::UNPROCESSABLE_ENTITY),
            ClientError::Status { status, .. } => Some(*status),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    #[serde(default)]
    error: String,
    #[serde(default)]
    agent: Option<String>,
    #[serde(default)]
    diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Ready,
    Running,
    Done,
}

#[derive(Debug, Clone, Serialize)]
pub struct NewSession {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub world: Option<String>,
    pub programs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ticks: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Created {
    pub id: String,
    pub status: SessionStatus,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AgentView {
    pub name: String,
    pub done: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub status: SessionStatus,
    pub clock: u64,
    pub max_ticks: u64,
    pub created_at: u64,
    pub agents: Vec<AgentView>,
    pub world: Value,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Stepped {
    pub records: Vec<TraceRecord>,
    #[serde(flatten)]
    pub snapshot: Snapshot,
}

#[derive(Debug, Deserialize)]
struct Compiled {
    code: String,
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: &str) -> Self {
        Client {
            base: base.trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn check(resp: Response) -> Result<Response, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await?;
        let body: ErrorBody = serde_json::from_str(&text).unwrap_or(ErrorBody {
            error: text,
            agent: None,
            diagnostics: Vec::new(),
        });
        if status == StatusCode::UNPROCESSABLE_ENTITY {
            return Err(ClientError::Invalid {
                message: body.error,
                agent: body.agent,
                diagnostics: body.diagnostics,
            });
        }
        Err(ClientError::Status {
            status,
            message: body.error,
        })
    }

    /// The raw catalog document.
    pub async fn catalog(&self) -> Result<Value, ClientError> {
        let resp = self.http.get(self.url("/api/catalog")).send().await?;
        Ok(Self::check(resp).await?.json().await?)
    }

    /// Compiles a krt document to canonical program text.
    pub async fn compile(&self, krt: &str) -> Result<String, ClientError> {
        let resp = self
            .http
            .post(self.url("/api/compile"))
            .header(reqwest::header::CONTENT_TYPE, "application/xml")
            .body(krt.to_string())
            .send()
            .await?;
        let c: Compiled = Self::check(resp).await?.json().await?;
        Ok(c.code)
    }

    pub async fn create_session(&self, req: &NewSession) -> Result<Created, ClientError> {
        let resp = self.http.post(self.url("/api/session")).json(req).send().await?;
        Ok(Self::check(resp).await?.json().await?)
    }

    pub async fn step(&self, id: &str, ticks: u64) -> Result<Stepped, ClientError> {
        let resp = self
            .http
            .post(self.url(&format!("/api/session/{id}/step")))
            .json(&serde_json::json!({ "ticks": ticks }))
            .send()
            .await?;
        Ok(Self::check(resp).await?.json().await?)
    }

    pub async fn state(&self, id: &str) -> Result<Snapshot, ClientError> {
        let resp = self
            .http
            .get(self.url(&format!("/api/session/{id}/state")))
            .send()
            .await?;
        Ok(Self::check(resp).await?.json().await?)
    }

    pub async fn delete(&self, id: &str) -> Result<(), ClientError> {
        let resp = self.http.delete(self.url(&format!("/api/session/{id}"))).send().await?;
        Self::check(resp).await?;
        Ok(())
    }

    /// Creates a session, steps it `chunk` ticks at a time until it is done
    /// and deletes it. Returns the whole trace.
    pub async fn run_session(&self, req: &NewSession, chunk: u64) -> Result<Vec<TraceRecord>, ClientError> {
        let created = self.create_session(req).await?;
        let mut trace = created.records;
        let mut status = created.status;
        while status != SessionStatus::Done {
            let stepped = self.step(&created.id, chunk.max(1)).await?;
            trace.extend(stepped.records);
            status = stepped.snapshot.status;
        }
        self.delete(&created.id).await?;
        Ok(trace)
    }
}
