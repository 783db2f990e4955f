//! HTTP service for claim prediction and sentence-level claim annotation.
//!
//! Endpoints (all JSON, every body carries `"v": 1`):
//!
//! | method | path                  | success | errors            |
//! |--------|-----------------------|---------|-------------------|
//! | POST   | `/predict`            | 200     | 400, 413, 503     |
//! | GET    | `/tasks/next`         | 200/204 | 400               |
//! | POST   | `/annotations`        | 201     | 400, 404, 409, 422|
//! | GET    | `/annotations/export` | 200     |                   |
//!
//! The export is the claim corpus format of `claimx_core::corpus`.

mod api;
mod predictor;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub use api::{router, PredictRequest, PredictResponse, SentenceOut, SubmitRequest};
pub use predictor::Predictor;
pub use store::{AnnotationStore, AnnotationTask, Submission};

/// Schema version carried in every request and response body.
pub const API_VERSION: u32 = 1;

/// Default request body limit in bytes.
pub const DEFAULT_BODY_LIMIT: usize = 256 * 1024;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub claim_model: Option<PathBuf>,
    pub discourse_model: Option<PathBuf>,
    pub tasks: Option<PathBuf>,
    pub store: PathBuf,
    pub body_limit: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown task {0}")]
    UnknownTask(u64),
    #[error("{0}")]
    Unprocessable(String),
    #[error("revision conflict: current revision is {current}")]
    Conflict { current: u64 },
    #[error("no model loaded")]
    ModelUnavailable,
    #[error("{0}")]
    Internal(String),
    #[error("startup: {0}")]
    Startup(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::UnknownTask(_) => StatusCode::NOT_FOUND,
            ServiceError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Conflict { .. } => StatusCode::CONFLICT,
            ServiceError::ModelUnavailable => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::Internal(_) | ServiceError::Startup(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(serde_json::json!({ "v": API_VERSION, "error": self.to_string() }))).into_response()
    }
}

/// Shared, cheaply clonable handler state.
#[derive(Clone)]
pub struct AppState {
    pub predictor: Option<Arc<Predictor>>,
    pub store: Arc<AnnotationStore>,
    pub body_limit: usize,
}

impl AppState {
    /// Loads models and tasks and replays the submission log.
    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let predictor = match &config.claim_model {
            Some(p) => Some(Arc::new(Predictor::load(p, config.discourse_model.as_deref())?)),
            None => {
                log::warn!("no claim model configured; /predict will answer 503");
                None
            }
        };
        let tasks = match &config.tasks {
            Some(p) => store::load_tasks(p)?,
            None => Vec::new(),
        };
        Ok(AppState {
            predictor,
            store: Arc::new(AnnotationStore::open(tasks, &config.store)?),
            body_limit: config.body_limit,
        })
    }
}

/// Binds `addr` and serves in a background task. Returns the bound address
/// (useful with port 0) and the server task.
pub async fn spawn(state: AppState, addr: SocketAddr) -> std::io::Result<(SocketAddr, JoinHandle<()>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let app = router(state);
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            log::error!("server stopped: {e}");
        }
    });
    Ok((local, handle))
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::load(&config)?;
    let listener = TcpListener::bind(config.addr)
        .await
        .map_err(|e| ServiceError::Startup(format!("bind {}: {e}", config.addr)))?;
    log::info!("listening on {}", config.addr);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))
}
