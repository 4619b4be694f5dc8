//! HTTP session service: live adaptive tests over JSON.
//!
//! `POST /sessions` starts a session and returns the first question,
//! `POST /sessions/{id}/answers` answers the pending one, and
//! `GET /sessions/{id}/diagnosis` reads the current report. Requests for one
//! session are serialized; distinct sessions proceed concurrently.

pub mod engine;
pub mod error;
pub mod session;
pub mod store;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;

pub use engine::Engine;
pub use error::{ErrorBody, ServiceError};
pub use session::{
    AnswerRequest, AnswerResponse, DiagnosisReport, LiveSession, SessionDefaults, StartRequest, StartResponse,
};
pub use store::SessionStore;

type Clock = dyn Fn() -> u64 + Send + Sync;

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

struct Inner {
    engine: RwLock<Option<Arc<Engine>>>,
    store: SessionStore,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    defaults: SessionDefaults,
    clock: Box<Clock>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// A service with no model loaded yet; session requests get 503 until
    /// [`AppState::warm`] is called.
    pub fn new(store: SessionStore, defaults: SessionDefaults) -> Self {
        Self::with_clock(store, defaults, unix_now)
    }

    pub fn with_clock(
        store: SessionStore,
        defaults: SessionDefaults,
        clock: impl Fn() -> u64 + Send + Sync + 'static,
    ) -> Self {
        Self(Arc::new(Inner {
            engine: RwLock::new(None),
            store,
            locks: Mutex::new(HashMap::new()),
            defaults,
            clock: Box::new(clock),
        }))
    }

    pub fn warm(&self, engine: Engine) {
        *self.0.engine.write().expect("engine lock poisoned") = Some(Arc::new(engine));
    }

    fn engine(&self) -> Result<Arc<Engine>, ServiceError> {
        self.0
            .engine
            .read()
            .expect("engine lock poisoned")
            .clone()
            .ok_or(ServiceError::NotReady)
    }

    fn session_lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.0.locks.lock().expect("lock table poisoned");
        Arc::clone(locks.entry(id.to_string()).or_default())
    }

    fn now(&self) -> u64 {
        (self.0.clock)()
    }

    fn load(&self, id: &str) -> Result<LiveSession, ServiceError> {
        self.0
            .store
            .get(id, self.now())?
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(start_session))
        .route("/sessions/{id}/answers", post(submit_answer))
        .route("/sessions/{id}/diagnosis", get(get_diagnosis))
        .with_state(state)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

async fn healthz(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "ready": state.engine().is_ok() }))
}

async fn start_session(
    State(state): State<AppState>,
    payload: Result<Json<StartRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<StartResponse>), ServiceError> {
    let req = body(payload)?;
    let engine = state.engine()?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let (session, response) = LiveSession::start(&engine, &req, &state.0.defaults, id, state.now())?;
    state.0.store.put(&session)?;
    Ok((StatusCode::CREATED, Json(response)))
}

async fn submit_answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<AnswerRequest>, JsonRejection>,
) -> Result<Json<AnswerResponse>, ServiceError> {
    let req = body(payload)?;
    let engine = state.engine()?;
    let lock = state.session_lock(&id);
    let _guard = lock.lock().await;
    let mut session = state.load(&id)?;
    let replayed = req
        .idempotency_token
        .as_ref()
        .is_some_and(|t| session.responses.contains_key(t));
    let response = session.submit(&engine, &req, state.now())?;
    if !replayed {
        state.0.store.put(&session)?;
    }
    Ok(Json(response))
}

async fn get_diagnosis(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<DiagnosisReport>, ServiceError> {
    let engine = state.engine()?;
    let session = state.load(&id)?;
    Ok(Json(session.report(&engine)?))
}
