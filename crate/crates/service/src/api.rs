use std::collections::BTreeMap;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::{AppState, ServiceError, API_VERSION};

#[derive(Debug, Deserialize)]
pub struct PredictRequest {
    #[serde(default)]
    pub title: String,
    pub abstract_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceOut {
    pub text: String,
    /// Label to probability, when a discourse model is loaded.
    pub discourse_dist: Option<BTreeMap<String, f64>>,
    pub claim_prob: f64,
    pub claim: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub v: u32,
    pub sentences: Vec<SentenceOut>,
}

#[derive(Debug, Deserialize)]
pub struct SubmitRequest {
    pub task_id: u64,
    pub annotator: String,
    pub indices: Vec<usize>,
    /// Optimistic-concurrency guard: the revision the client last saw.
    #[serde(default)]
    pub if_match: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    annotator: Option<String>,
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, Response> {
    match payload {
        Ok(Json(v)) => Ok(v),
        Err(rej) if rej.status() == StatusCode::PAYLOAD_TOO_LARGE => Err((
            StatusCode::PAYLOAD_TOO_LARGE,
            Json(serde_json::json!({ "v": API_VERSION, "error": "request body too large" })),
        )
            .into_response()),
        Err(rej) => Err(ServiceError::BadRequest(rej.body_text()).into_response()),
    }
}

async fn predict(State(state): State<AppState>, payload: Result<Json<PredictRequest>, JsonRejection>) -> Response {
    let req = match body(payload) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let Some(predictor) = state.predictor.clone() else {
        return ServiceError::ModelUnavailable.into_response();
    };
    if req.abstract_text.trim().is_empty() {
        return ServiceError::BadRequest("abstract_text is empty".into()).into_response();
    }
    let result = tokio::task::spawn_blocking(move || predictor.predict_text(&req.title, &req.abstract_text)).await;
    match result {
        Ok(Ok(sentences)) => Json(PredictResponse {
            v: API_VERSION,
            sentences,
        })
        .into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ServiceError::Internal(e.to_string()).into_response(),
    }
}

async fn next_task(State(state): State<AppState>, Query(q): Query<NextQuery>) -> Response {
    let Some(annotator) = q.annotator.filter(|a| !a.trim().is_empty()) else {
        return ServiceError::BadRequest("missing `annotator` query parameter".into()).into_response();
    };
    match state.store.next_task(&annotator) {
        Some(task) => Json(task).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

async fn submit(State(state): State<AppState>, payload: Result<Json<SubmitRequest>, JsonRejection>) -> Response {
    let req = match body(payload) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let store = state.store.clone();
    let result =
        tokio::task::spawn_blocking(move || store.submit(req.task_id, &req.annotator, req.indices, req.if_match)).await;
    match result {
        Ok(Ok(sub)) => (StatusCode::CREATED, Json(sub)).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ServiceError::Internal(e.to_string()).into_response(),
    }
}

async fn export(State(state): State<AppState>) -> Response {
    ([(header::CONTENT_TYPE, "application/x-ndjson")], state.store.export()).into_response()
}

pub fn router(state: AppState) -> Router {
    let limit = state.body_limit;
    Router::new()
        .route("/predict", post(predict))
        .route("/tasks/next", get(next_task))
        .route("/annotations", post(submit))
        .route("/annotations/export", get(export))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}
