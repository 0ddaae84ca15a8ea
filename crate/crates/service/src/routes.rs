use std::collections::BTreeMap;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use kitrobot_core::codegen::compile_graph;
use kitrobot_core::graph::{load_krt, KrtError};
use kitrobot_core::scenario::{Scenario, Setup, Status};
use kitrobot_core::vm::TraceRecord;
use serde::{Deserialize, Serialize};

use crate::session::{Run, Snapshot};
use crate::{ApiError, AppState, DEFAULT_MAX_TICKS};

pub(crate) async fn catalog(State(state): State<AppState>) -> Result<Response, ApiError> {
    match &state.inner.catalog_json {
        Ok(body) => Ok(([(header::CONTENT_TYPE, "application/json")], body.clone()).into_response()),
        Err(e) => Err(ApiError::Internal(format!("catalog failed to load: {e}"))),
    }
}

#[derive(Serialize)]
pub(crate) struct Compiled {
    code: String,
}

pub(crate) async fn compile(State(state): State<AppState>, body: String) -> Result<Json<Compiled>, ApiError> {
    let catalog = state
        .inner
        .catalog
        .as_ref()
        .map_err(|e| ApiError::Internal(format!("catalog failed to load: {e}")))?;
    let graph = load_krt(&body).map_err(|e| match e {
        KrtError::Invariant(diags) => ApiError::diagnostics(diags),
        other => ApiError::BadRequest(other.to_string()),
    })?;
    let code = compile_graph(&graph, catalog).map_err(ApiError::diagnostics)?;
    Ok(Json(Compiled { code }))
}

#[derive(Deserialize)]
pub(crate) struct NewSession {
    world: Option<String>,
    #[serde(default)]
    programs: BTreeMap<String, String>,
    max_ticks: Option<u64>,
}

#[derive(Serialize)]
pub(crate) struct Created {
    id: String,
    status: Status,
    records: Vec<TraceRecord>,
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(v)| v).map_err(|e| ApiError::BadRequest(e.body_text()))
}

pub(crate) async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<NewSession>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let req = json_body(body)?;
    let world = match req.world {
        Some(w) => w,
        None => match &state.inner.world {
            Ok(Some(w)) => w.clone(),
            Ok(None) => {
                return Err(ApiError::BadRequest(
                    "no world given and no default world configured".into(),
                ))
            }
            Err(e) => return Err(ApiError::Internal(format!("default world failed to load: {e}"))),
        },
    };
    let programs: Vec<(String, String)> = req.programs.into_iter().collect();
    let setup = Setup::from_text(&world, &state.inner.base, &programs)?;
    let mut run = Run::new(Scenario::new(setup, req.max_ticks.unwrap_or(DEFAULT_MAX_TICKS)));
    let records = run.take_new();
    let status = run.scenario.status();
    let session = state.inner.sessions.insert(run);
    Ok((
        StatusCode::CREATED,
        Json(Created {
            id: session.id.clone(),
            status,
            records,
        }),
    ))
}

#[derive(Deserialize)]
pub(crate) struct StepRequest {
    ticks: u64,
}

#[derive(Serialize)]
pub(crate) struct Stepped {
    records: Vec<TraceRecord>,
    #[serde(flatten)]
    snapshot: Snapshot,
}

const LOST: &str = "session state was lost";

pub(crate) async fn step_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<StepRequest>, JsonRejection>,
) -> Result<Json<Stepped>, ApiError> {
    let session = state.inner.sessions.get(&id).ok_or(ApiError::NotFound)?;
    let ticks = json_body(body)?.ticks;
    let mut guard = session
        .run
        .clone()
        .try_lock_owned()
        .map_err(|_| ApiError::Conflict("another step is in progress"))?;
    let mut run = guard.take().ok_or_else(|| ApiError::Internal(LOST.into()))?;
    if run.scenario.is_done() {
        *guard = Some(run);
        return Err(ApiError::Conflict("session is done"));
    }
    let created_at = session.created_at;
    // The guard stays with a detached task so the session remains locked
    // for exactly as long as the step runs, even if the client goes away.
    let task = tokio::spawn(async move {
        let stepped = tokio::task::spawn_blocking(move || {
            run.scenario.step_many(ticks);
            let records = run.take_new();
            let snapshot = run.snapshot(&id, created_at);
            (run, Stepped { records, snapshot })
        })
        .await;
        match stepped {
            Ok((run, reply)) => {
                *guard = Some(run);
                Some(reply)
            }
            Err(_) => None,
        }
    });
    match task.await {
        Ok(Some(reply)) => Ok(Json(reply)),
        _ => Err(ApiError::Internal(LOST.into())),
    }
}

pub(crate) async fn session_state(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Snapshot>, ApiError> {
    let session = state.inner.sessions.get(&id).ok_or(ApiError::NotFound)?;
    let guard = session.run.lock().await;
    let run = guard.as_ref().ok_or_else(|| ApiError::Internal(LOST.into()))?;
    Ok(Json(run.snapshot(&session.id, session.created_at)))
}

pub(crate) async fn delete_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    if state.inner.sessions.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::NotFound)
    }
}
