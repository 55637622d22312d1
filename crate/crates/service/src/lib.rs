//! HTTP + JSON service hosting live compass sessions.
//!
//! | route                               | purpose                                  |
//! |-------------------------------------|------------------------------------------|
//! | `POST /sessions`                    | create from tables (or empty) and config |
//! | `GET /sessions/{id}`                | tables, readings, grade, version         |
//! | `POST /sessions/{id}/mutations`     | apply one mutation at `expected_version` |
//! | `POST /sessions/{id}/whatif`        | recompute hypothetical mutations         |
//! | `GET /sessions/{id}/events`         | server-sent `mutation` events            |
//! | `GET /sessions/{id}/render.svg`     | SVG at `stage`, for `sphere`, at `size`  |
//! | `GET /healthz`                      | liveness                                 |
//!
//! Errors are JSON [`ApiError`] bodies.

mod error;
mod store;

use std::collections::{BTreeSet, HashMap};
use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use futures::stream::{self, Stream, StreamExt};
use policy_compass::elicitation::{Mutation, Session, SessionEvent, SessionSeed, SessionState};
use policy_compass::io::{parse_table, TableDocument, TableFormat};
use policy_compass::render::{render_compass, render_ecological, RenderOptions, Stage};
use policy_compass::robustness::{assess_table, RobustnessGrade, RobustnessSettings};
use policy_compass::{CompassConfig, CompassReading, EcologicalCompass, IndicatorTable, Sphere, SphereWeights};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, Mutex, RwLock};

pub use error::{ApiError, ErrorCode};
pub use store::{valid_session_id, Store, StoreError};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CreateSession {
    /// Chosen by the server when absent.
    #[serde(default)]
    pub id: Option<String>,
    /// One table, or eco, socio and econo tables; none for an empty session.
    #[serde(default)]
    pub tables: Vec<TableDocument>,
    #[serde(default)]
    pub config: CompassConfig,
    #[serde(default)]
    pub weights: SphereWeights,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub version: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MutationRequest {
    #[serde(default)]
    pub expected_version: Option<u64>,
    pub mutation: Mutation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MutationAccepted {
    pub version: u64,
    pub event: SessionEvent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhatIfRequest {
    pub mutations: Vec<Mutation>,
}

/// A session as seen by clients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateView {
    pub session_id: String,
    pub version: u64,
    pub tables: Vec<IndicatorTable>,
    pub readings: Vec<CompassReading>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ecological: Option<EcologicalCompass>,
    pub grade: RobustnessGrade,
    pub config: CompassConfig,
    pub weights: SphereWeights,
    pub participants: BTreeSet<String>,
}

/// Hypothetical state; `base_version` is the version it was computed from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhatIfView {
    pub base_version: u64,
    pub tables: Vec<IndicatorTable>,
    pub readings: Vec<CompassReading>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ecological: Option<EcologicalCompass>,
}

/// Payload of each server-sent `mutation` event.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventNote {
    pub version: u64,
    pub at: chrono::DateTime<Utc>,
    pub summary: String,
    pub mutation: Mutation,
}

impl From<&SessionEvent> for EventNote {
    fn from(e: &SessionEvent) -> Self {
        Self { version: e.version, at: e.at, summary: e.mutation.summary(), mutation: e.mutation.clone() }
    }
}

struct Live {
    session: Session,
    events: broadcast::Sender<SessionEvent>,
}

type Handle = Arc<Mutex<Live>>;

pub struct AppState {
    store: Store,
    settings: RobustnessSettings,
    sessions: RwLock<HashMap<String, Handle>>,
}

impl AppState {
    /// Opens the state directory and replays every stored session.
    pub fn open(state_dir: &Path, settings: RobustnessSettings) -> Result<(Arc<Self>, Vec<StoreError>), StoreError> {
        let store = Store::open(state_dir)?;
        let (sessions, problems) = store.recover();
        let map = sessions.into_iter().map(|s| (s.id().to_string(), live(s))).collect();
        Ok((Arc::new(Self { store, settings, sessions: RwLock::new(map) }), problems))
    }

    pub async fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().await.keys().cloned().collect();
        ids.sort();
        ids
    }

    async fn handle(&self, id: &str) -> Result<Handle, ApiError> {
        self.sessions.read().await.get(id).cloned().ok_or_else(|| ApiError::session_not_found(id))
    }

    fn view(&self, session: &Session) -> Result<StateView, ApiError> {
        let state = session.state();
        Ok(StateView {
            session_id: session.id().to_string(),
            version: session.version(),
            tables: state.tables.clone(),
            readings: state.readings().map_err(|e| ApiError::internal(e.to_string()))?,
            ecological: state.ecological()?,
            grade: combined_grade(state, &self.settings)?,
            config: state.config,
            weights: state.weights,
            participants: state.participants.clone(),
        })
    }
}

fn live(session: Session) -> Handle {
    let (events, _) = broadcast::channel(256);
    Arc::new(Mutex::new(Live { session, events }))
}

fn combined_grade(state: &SessionState, settings: &RobustnessSettings) -> Result<RobustnessGrade, ApiError> {
    let mut reasons = Vec::new();
    for t in &state.tables {
        let grade = assess_table(t, &state.config, settings).map_err(|e| ApiError::internal(e.to_string()))?;
        if let RobustnessGrade::Hesitant { reasons: r } = grade {
            let prefix = if state.tables.len() == 3 { format!("{}: ", t.sphere()) } else { String::new() };
            reasons.extend(r.into_iter().map(|r| format!("{prefix}{r}")));
        }
    }
    Ok(if reasons.is_empty() { RobustnessGrade::Robust } else { RobustnessGrade::Hesitant { reasons } })
}

fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/mutations", post(mutate))
        .route("/sessions/{id}/whatif", post(what_if))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/render.svg", get(render))
        .with_state(state)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = if body.is_empty() { CreateSession::default() } else { decode(&body)? };
    let id = req.id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    if !valid_session_id(&id) {
        return Err(ApiError::bad_request("session ids are 1-64 characters of [A-Za-z0-9_-]"));
    }
    req.config.validate().map_err(|e| {
        ApiError::new(ErrorCode::ValidationFailed, e.to_string()).with_details(e.to_string())
    })?;
    let mut tables = Vec::new();
    for (i, doc) in req.tables.into_iter().enumerate() {
        let bytes = serde_json::to_vec(&doc).expect("document serializes");
        let t = parse_table(&bytes, TableFormat::Json, &req.config.layout).map_err(|errs| {
            ApiError::new(ErrorCode::ValidationFailed, format!("table {i}: {errs}")).with_details(&errs)
        })?;
        tables.push(t);
    }
    if tables.is_empty() {
        tables.push(IndicatorTable::empty(Sphere::Unspecified, "").expect("empty table"));
    }
    let seed = SessionSeed { id: id.clone(), tables, config: req.config, weights: req.weights, created_at: Some(Utc::now()) };
    let session = Session::new(seed)?;

    let mut sessions = app.sessions.write().await;
    if sessions.contains_key(&id) || app.store.exists(&id) {
        return Err(ApiError::new(ErrorCode::ValidationFailed, format!("session `{id}` already exists")));
    }
    app.store.create(session.seed()).map_err(|e| ApiError::internal(e.to_string()))?;
    sessions.insert(id.clone(), live(session));
    Ok((axum::http::StatusCode::CREATED, Json(Created { session_id: id, version: 0 })).into_response())
}

async fn get_session(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<StateView>, ApiError> {
    let handle = app.handle(&id).await?;
    let live = handle.lock().await;
    Ok(Json(app.view(&live.session)?))
}

async fn mutate(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<MutationAccepted>, ApiError> {
    let req: MutationRequest = decode(&body)?;
    let handle = app.handle(&id).await?;
    let mut live = handle.lock().await;
    // Apply to a copy so a failed write leaves the session unchanged.
    let mut next = live.session.clone();
    let version = next.apply(req.expected_version, req.mutation, Utc::now())?;
    let event = next.events().last().expect("event just appended").clone();
    app.store.append(&id, &event).map_err(|e| ApiError::internal(e.to_string()))?;
    live.session = next;
    let _ = live.events.send(event.clone());
    Ok(Json(MutationAccepted { version, event }))
}

async fn what_if(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<WhatIfView>, ApiError> {
    let req: WhatIfRequest = decode(&body)?;
    let handle = app.handle(&id).await?;
    let (base_version, state) = {
        let live = handle.lock().await;
        (live.session.version(), live.session.what_if(&req.mutations)?)
    };
    Ok(Json(WhatIfView {
        base_version,
        readings: state.readings().map_err(|e| ApiError::internal(e.to_string()))?,
        ecological: state.ecological()?,
        tables: state.tables,
    }))
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    since: Option<u64>,
}

/// Replays events after `since` (or `Last-Event-ID`), then follows live ones.
async fn events(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let last_seen = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<u64>().ok());
    let since = q.since.or(last_seen).unwrap_or(0);
    let handle = app.handle(&id).await?;
    let (backlog, rx) = {
        let live = handle.lock().await;
        let backlog: Vec<SessionEvent> =
            live.session.events().iter().filter(|e| e.version > since).cloned().collect();
        (backlog, live.events.subscribe())
    };
    let mut next_version = backlog.last().map_or(since, |e| e.version) + 1;
    let live = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(ev) => return Some((ev, rx)),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    })
    .filter(move |ev| {
        let fresh = ev.version >= next_version;
        if fresh {
            next_version = ev.version + 1;
        }
        futures::future::ready(fresh)
    });
    let all = stream::iter(backlog).chain(live).map(|ev| {
        let note = EventNote::from(&ev);
        Ok(Event::default()
            .event("mutation")
            .id(ev.version.to_string())
            .data(serde_json::to_string(&note).expect("note serializes")))
    });
    Ok(Sse::new(all).keep_alive(KeepAlive::default()))
}

#[derive(Debug, Deserialize)]
struct RenderQuery {
    stage: Option<String>,
    sphere: Option<String>,
    size: Option<u32>,
}

async fn render(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<RenderQuery>,
) -> Result<Response, ApiError> {
    let stage: Stage = match &q.stage {
        Some(s) => s.parse().map_err(ApiError::bad_request)?,
        None => Stage::FinalArrow,
    };
    let sphere: Option<Sphere> = match &q.sphere {
        Some(s) => Some(s.parse().map_err(|e: policy_compass::model::ParseEnumError| ApiError::bad_request(e.to_string()))?),
        None => None,
    };
    let size_px = q.size.unwrap_or(400);
    if size_px == 0 {
        return Err(ApiError::bad_request("size must be positive"));
    }
    let handle = app.handle(&id).await?;
    let live = handle.lock().await;
    let state = live.session.state();
    let grade = combined_grade(state, &app.settings)?;
    let opts = RenderOptions { stage, size_px, grade: Some(grade), ..RenderOptions::default() };
    let svg = if matches!(stage, Stage::Spheres | Stage::Composition) && sphere.is_none() {
        let ec = state.ecological()?.ok_or_else(|| {
            ApiError::bad_request("sphere stages need a session with eco, socio and econo tables")
        })?;
        render_ecological(&ec, &opts)
    } else {
        let table = match sphere {
            Some(s) => state.table(s).ok_or_else(|| ApiError::new(ErrorCode::NotFound, format!("no {s} table")))?,
            None => &state.tables[0],
        };
        let reading =
            policy_compass::compass_reading(table, &state.config).map_err(|e| ApiError::internal(e.to_string()))?;
        render_compass(&reading, &opts)
    };
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: std::io::Error },
    #[error(transparent)]
    StateDirUnwritable(#[from] StoreError),
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

pub async fn bind(addr: &str) -> Result<TcpListener, ServeError> {
    TcpListener::bind(addr).await.map_err(|source| ServeError::BindFailure { addr: addr.to_string(), source })
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

pub fn local_addr(listener: &TcpListener) -> Result<SocketAddr, ServeError> {
    Ok(listener.local_addr()?)
}
