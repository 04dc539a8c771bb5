//! JSON-over-HTTP interface for the browser client.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Error;
use crate::prefmodel::Confidence;
use crate::session::{self, Clock, PairTag, Playable, Progress, Session, SessionConfig, Side, Stimulus};
use crate::signal::SignalParams;

type Shared = Arc<Mutex<Session>>;

/// In-memory session registry, optionally mirrored to a log directory.
pub struct AppState {
    sessions: RwLock<HashMap<String, Shared>>,
    next_id: AtomicU64,
    clock: Arc<dyn Clock>,
    log_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(clock: Arc<dyn Clock>, log_dir: Option<PathBuf>) -> Arc<Self> {
        Arc::new(Self { sessions: RwLock::new(HashMap::new()), next_id: AtomicU64::new(1), clock, log_dir })
    }

    fn get(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions.read().expect("session map lock").get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    fn persist(&self, session: &Session) -> Result<(), ApiError> {
        if let Some(dir) = &self.log_dir {
            session::save_session(session.state(), &dir.join(format!("{}.json", session.id())))?;
        }
        Ok(())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/query", get(query))
        .route("/sessions/{id}/response", post(response))
        .route("/sessions/{id}/recommendation", get(recommendation))
        .route("/sessions/{id}/validation", get(validation))
        .route("/sessions/{id}/validation/response", post(validation_response))
        .route("/sessions/{id}/favorites", post(favorite))
        .route("/sessions/{id}/log", get(log))
        .route("/sessions/{id}/preview", post(preview))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn not_found(id: &str) -> Self {
        Self { status: StatusCode::NOT_FOUND, message: format!("no session {id:?}") }
    }

    fn bad_request(message: String) -> Self {
        Self { status: StatusCode::BAD_REQUEST, message }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Protocol(_) => StatusCode::CONFLICT,
            Error::OutOfRange { .. } | Error::InvalidConfig(_) | Error::InvalidInput(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self { status, message: e.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default)]
    pub config: Option<SessionConfig>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub seed: u64,
}

async fn create(State(app): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<CreateResponse>), ApiError> {
    let req: CreateRequest =
        if body.iter().all(u8::is_ascii_whitespace) { CreateRequest::default() } else { parse(&body)? };
    let id = format!("s{}", app.next_id.fetch_add(1, Ordering::Relaxed));
    let session = Session::create(id.clone(), req.config.unwrap_or_default(), app.clock.clone())?;
    let seed = session.seed();
    app.persist(&session)?;
    app.sessions.write().expect("session map lock").insert(id.clone(), Arc::new(Mutex::new(session)));
    log::info!("created session {id} with seed {seed}");
    Ok((StatusCode::CREATED, Json(CreateResponse { session_id: id, seed })))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlayablePair {
    #[serde(rename = "A")]
    pub a: Playable,
    #[serde(rename = "B")]
    pub b: Playable,
}

fn playable_pair(s: &Session, a: &Stimulus, b: &Stimulus) -> Result<PlayablePair, ApiError> {
    Ok(PlayablePair { a: s.render(&a.params)?, b: s.render(&b.params)? })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryResponse {
    pub round: usize,
    pub budget: usize,
    pub pair: PlayablePair,
}

async fn query(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<QueryResponse> {
    let shared = app.get(&id)?;
    let s = shared.lock().expect("session lock");
    let pending = s.pending()?;
    Ok(Json(QueryResponse {
        round: pending.round,
        budget: s.state().config.budget,
        pair: playable_pair(&s, &pending.a, &pending.b)?,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseRequest {
    pub choice: Side,
    pub confidence: u8,
    #[serde(default)]
    pub playback: Option<String>,
}

async fn response(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Progress> {
    let shared = app.get(&id)?;
    let req: ResponseRequest = parse(&body)?;
    let confidence = Confidence::new(req.confidence)?;
    let mut s = shared.lock().expect("session lock");
    let progress = s.submit_response(req.choice, confidence, req.playback)?;
    app.persist(&s)?;
    Ok(Json(progress))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RecommendationResponse {
    pub params: SignalParams,
    pub timeline: crate::signal::PulseTimeline,
    pub posterior_mean: f64,
}

async fn recommendation(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<RecommendationResponse> {
    let shared = app.get(&id)?;
    let s = shared.lock().expect("session lock");
    let rec = *s.recommendation()?;
    let Playable { params, timeline } = s.render(&rec.stimulus.params)?;
    Ok(Json(RecommendationResponse { params, timeline, posterior_mean: rec.posterior_mean }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ValidationPairResponse {
    pub tag: PairTag,
    pub index: usize,
    pub pair: PlayablePair,
}

async fn validation(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<ValidationPairResponse> {
    let shared = app.get(&id)?;
    let s = shared.lock().expect("session lock");
    let (pair, a, b) = s.next_validation_pair()?;
    let index = s.state().validation.as_ref().map_or(0, |v| v.responses.len());
    Ok(Json(ValidationPairResponse { tag: pair.tag, index, pair: playable_pair(&s, &a, &b)? }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationRequest {
    pub tag: PairTag,
    pub choice: Side,
}

async fn validation_response(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<serde_json::Value> {
    let shared = app.get(&id)?;
    let req: ValidationRequest = parse(&body)?;
    let mut s = shared.lock().expect("session lock");
    let changed = s.submit_validation_response(req.tag, req.choice)?;
    app.persist(&s)?;
    let v = s.state().validation.as_ref().expect("validation exists after a response");
    Ok(Json(match changed {
        Some(phase) => json!({ "phase_change": phase, "accuracy": v.accuracy, "inconsistent": v.inconsistent }),
        None => json!({ "next_pair": v.responses.len() }),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsRequest {
    pub params: SignalParams,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FavoriteResponse {
    pub count: usize,
    pub posterior_mean: f64,
    pub percentile: f64,
    pub phase: session::Phase,
}

async fn favorite(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<FavoriteResponse> {
    let shared = app.get(&id)?;
    let req: ParamsRequest = parse(&body)?;
    let mut s = shared.lock().expect("session lock");
    let fav = *s.record_favorite(req.params)?;
    app.persist(&s)?;
    Ok(Json(FavoriteResponse {
        count: s.state().favorites.len(),
        posterior_mean: fav.posterior_mean,
        percentile: fav.percentile,
        phase: s.phase(),
    }))
}

async fn log(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let shared = app.get(&id)?;
    let text = session::to_json(shared.lock().expect("session lock").state())?;
    Ok(([(axum::http::header::CONTENT_TYPE, "application/json")], text).into_response())
}

async fn preview(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<crate::signal::PulseTimeline> {
    let shared = app.get(&id)?;
    let req: ParamsRequest = parse(&body)?;
    let s = shared.lock().expect("session lock");
    Ok(Json(s.render(&req.params)?.timeline))
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(addr: std::net::SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
