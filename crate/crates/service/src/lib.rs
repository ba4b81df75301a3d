//! JSON-over-HTTP rating service.
//!
//! * `GET /api/task?worker_id=W` returns a task payload, or 204 when the
//!   worker has nothing left to rate.
//! * `GET /api/audio/{asset_id}` returns the audio bytes.
//! * `POST /api/judgment` stores a judgment and returns a receipt (201).

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use keyprosody_core::collection::{CollectionError, Collector, FieldError, JudgmentSubmission, NextTask};
use keyprosody_core::synth::AudioStore;

#[derive(Clone)]
pub struct AppState {
    pub collector: Arc<Collector>,
    pub audio: AudioStore,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/task", get(get_task))
        .route("/api/audio/{asset_id}", get(get_audio))
        .route("/api/judgment", post(post_judgment))
        .with_state(state)
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("rating service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn field_errors(fields: Vec<FieldError>) -> Response {
    (
        StatusCode::UNPROCESSABLE_ENTITY,
        Json(json!({ "error": "invalid judgment", "fields": fields })),
    )
        .into_response()
}

#[derive(Deserialize)]
struct TaskQuery {
    worker_id: Option<String>,
}

async fn get_task(State(st): State<AppState>, Query(q): Query<TaskQuery>) -> Response {
    let Some(worker) = q.worker_id.filter(|w| !w.trim().is_empty()) else {
        return error(StatusCode::BAD_REQUEST, "worker_id is required");
    };
    let collector = st.collector.clone();
    match tokio::task::spawn_blocking(move || collector.next_task(&worker)).await {
        Ok(NextTask::Assigned(task)) => Json(task.payload()).into_response(),
        Ok(NextTask::NoWork) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn get_audio(State(st): State<AppState>, Path(asset_id): Path<String>) -> Response {
    let store = st.audio.clone();
    match tokio::task::spawn_blocking(move || store.load(&asset_id)).await {
        Ok(Ok(Some(asset))) => (
            [(header::CONTENT_TYPE, asset.media_type.clone())],
            Body::from(asset.bytes),
        )
            .into_response(),
        Ok(Ok(None)) => error(StatusCode::NOT_FOUND, "no such audio"),
        Ok(Err(e)) => {
            log::error!("audio store: {e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, "audio unavailable")
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

const STRING_FIELDS: [&str; 3] = ["task_id", "worker_id", "typed_key"];
const INTEGER_FIELDS: [&str; 4] = ["informativeness", "elocution", "interruption", "length_rating"];

/// Shape check of a raw body, reporting every missing or mistyped field.
#[allow(clippy::result_large_err)]
fn parse_submission(body: &[u8]) -> Result<JudgmentSubmission, Response> {
    let value: Value =
        serde_json::from_slice(body).map_err(|e| error(StatusCode::BAD_REQUEST, format!("body is not JSON: {e}")))?;
    let Some(obj) = value.as_object() else {
        return Err(error(StatusCode::BAD_REQUEST, "body must be a JSON object"));
    };
    let mut fields = Vec::new();
    for name in STRING_FIELDS {
        match obj.get(name) {
            Some(Value::String(_)) => {}
            Some(_) => fields.push(FieldError {
                field: name.into(),
                message: "must be a string".into(),
            }),
            None => fields.push(FieldError {
                field: name.into(),
                message: "missing".into(),
            }),
        }
    }
    for name in INTEGER_FIELDS {
        match obj.get(name) {
            Some(v) if v.is_i64() => {}
            Some(_) => fields.push(FieldError {
                field: name.into(),
                message: "must be an integer".into(),
            }),
            None => fields.push(FieldError {
                field: name.into(),
                message: "missing".into(),
            }),
        }
    }
    if !fields.is_empty() {
        return Err(field_errors(fields));
    }
    serde_json::from_value(value).map_err(|e| error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))
}

async fn post_judgment(State(st): State<AppState>, body: Bytes) -> Response {
    let sub = match parse_submission(&body) {
        Ok(s) => s,
        Err(resp) => return resp,
    };
    let collector = st.collector.clone();
    let result = match tokio::task::spawn_blocking(move || collector.submit(&sub)).await {
        Ok(r) => r,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    match result {
        Ok(receipt) => (StatusCode::CREATED, Json(receipt)).into_response(),
        Err(CollectionError::Validation(fields)) => field_errors(fields),
        Err(e @ CollectionError::UnknownTask(_)) => error(StatusCode::NOT_FOUND, e.to_string()),
        Err(e @ CollectionError::WrongWorker { .. }) => error(StatusCode::FORBIDDEN, e.to_string()),
        Err(e @ CollectionError::Duplicate(_)) => error(StatusCode::CONFLICT, e.to_string()),
        Err(e @ CollectionError::Store(_)) => {
            log::error!("{e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, "judgment could not be stored")
        }
    }
}
