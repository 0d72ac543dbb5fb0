//! HTTP+JSON session service. A client creates an execution and then plays
//! the adversary: it reads the enabled scheduler actions and posts the one
//! to apply.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;
use uuid::Uuid;

use gridex_core::engine::{write_trace, EnabledActions, Pending, TraceEvent, TraceHeader};
use gridex_core::protocols::{protocol_by_name, PROTOCOL_NAMES};
use gridex_core::{Configuration, EngineState, Error, GridDims, Model, Multiplicity, SchedulerAction};

use crate::commands::initial_configuration;

pub const DEFAULT_IDLE_EXPIRY: Duration = Duration::from_secs(3600);

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::SchedulerContract(_) => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Deserialize)]
pub struct CreateRequest {
    pub grid: String,
    pub k: usize,
    pub protocol: String,
    pub model: Model,
    #[serde(default)]
    pub initial: Option<String>,
    #[serde(default)]
    pub mode: Option<Multiplicity>,
    /// Seeds the sampled initial configuration when `initial` is omitted.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ActionRequest {
    pub action: SchedulerAction,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobotState {
    pub robot: usize,
    pub node: [usize; 2],
    /// `idle` or `computed`.
    pub state: &'static str,
    pub targets: Vec<[usize; 2]>,
    pub snapshot_step: Option<u64>,
    /// Steps elapsed since the stored observation.
    pub age: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionState {
    pub grid: GridDims,
    pub k: usize,
    pub protocol: String,
    pub model: Model,
    pub mode: Multiplicity,
    pub config: Vec<[usize; 3]>,
    pub pending: Vec<RobotState>,
    pub visited: Vec<[usize; 2]>,
    pub visited_count: usize,
    pub node_count: usize,
    pub explored: bool,
    pub enabled_actions: EnabledActions,
    pub quiescent: bool,
    pub step: u64,
    pub history: usize,
    pub created_at: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Created {
    pub id: String,
    pub state: SessionState,
}

struct Session {
    header: TraceHeader,
    engine: EngineState,
    /// Applied actions with the state before each one.
    history: Vec<(TraceEvent, EngineState)>,
    /// Seconds since the Unix epoch.
    created_at: u64,
    last_used: Instant,
}

impl Session {
    fn snapshot(&self) -> ApiResult<SessionState> {
        let e = &self.engine;
        let grid = e.grid();
        let pending = e
            .robots()
            .iter()
            .enumerate()
            .map(|(robot, slot)| {
                let (state, targets, snapshot_step) = match &slot.pending {
                    Pending::Idle => ("idle", Vec::new(), None),
                    Pending::Computed { targets, snapshot_step } => {
                        ("computed", targets.iter().map(|t| [t.x, t.y]).collect(), Some(*snapshot_step))
                    }
                };
                RobotState {
                    robot,
                    node: [slot.pos.x, slot.pos.y],
                    state,
                    targets,
                    snapshot_step,
                    age: snapshot_step.map(|s| e.step_count() - s),
                }
            })
            .collect();
        Ok(SessionState {
            grid,
            k: e.robots().len(),
            protocol: self.header.protocol.clone(),
            model: e.model(),
            mode: e.mode(),
            config: e.config().to_triples(),
            pending,
            visited: e.visited().into_iter().map(|v| [v.x, v.y]).collect(),
            visited_count: e.visited_count(),
            node_count: grid.node_count(),
            explored: e.explored(),
            enabled_actions: e.enabled_actions()?,
            quiescent: e.is_quiescent()?,
            step: e.step_count(),
            history: self.history.len(),
            created_at: self.created_at,
        })
    }

    fn trace(&self) -> ApiResult<Vec<u8>> {
        let events: Vec<TraceEvent> = self.history.iter().map(|(ev, _)| ev.clone()).collect();
        let mut out = Vec::new();
        write_trace(&mut out, &self.header, &events)?;
        Ok(out)
    }
}

pub struct Sessions {
    map: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    idle_expiry: Duration,
}

impl Sessions {
    pub fn new(idle_expiry: Duration) -> Self {
        Sessions { map: Mutex::new(HashMap::new()), idle_expiry }
    }

    fn get(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        let map = self.map.lock().expect("session map poisoned");
        map.get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    /// Drops sessions idle for longer than the expiry; returns how many.
    pub fn expire_idle(&self, now: Instant) -> usize {
        let mut map = self.map.lock().expect("session map poisoned");
        let before = map.len();
        map.retain(|_, s| {
            let s = s.lock().expect("session poisoned");
            now.saturating_duration_since(s.last_used) <= self.idle_expiry
        });
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("session map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn with_session<T>(sessions: &Sessions, id: &str, f: impl FnOnce(&mut Session) -> ApiResult<T>) -> ApiResult<T> {
    let handle = sessions.get(id)?;
    let mut s = handle.lock().expect("session poisoned");
    s.last_used = Instant::now();
    f(&mut s)
}

async fn create(State(sessions): State<Arc<Sessions>>, Json(req): Json<CreateRequest>) -> ApiResult<impl IntoResponse> {
    let grid: GridDims = req.grid.parse()?;
    let protocol = protocol_by_name(&req.protocol, grid, req.k)?;
    let seed = req.seed.unwrap_or(0);
    let initial: Configuration = initial_configuration(grid, req.k, req.initial.as_deref(), seed)?;
    let mode = req.mode.unwrap_or(Multiplicity::Weak);
    let engine = EngineState::init(&initial, protocol, req.model, mode)?;
    let header = TraceHeader {
        grid: grid.to_string(),
        k: req.k,
        protocol: req.protocol.clone(),
        model: req.model,
        mode,
        initial: initial.to_string(),
        seed: Some(seed),
    };
    let now = Instant::now();
    let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let session = Session { header, engine, history: Vec::new(), created_at, last_used: now };
    let state = session.snapshot()?;
    let id = Uuid::new_v4().to_string();
    sessions.map.lock().expect("session map poisoned").insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(Created { id, state })))
}

async fn show(State(sessions): State<Arc<Sessions>>, Path(id): Path<String>) -> ApiResult<Json<SessionState>> {
    with_session(&sessions, &id, |s| s.snapshot().map(Json))
}

async fn act(
    State(sessions): State<Arc<Sessions>>,
    Path(id): Path<String>,
    Json(req): Json<ActionRequest>,
) -> ApiResult<Json<SessionState>> {
    with_session(&sessions, &id, |s| {
        let before = s.engine.clone();
        let event = s.engine.step(&req.action).inspect_err(|_| s.engine = before.clone())?;
        s.history.push((event, before));
        s.snapshot().map(Json)
    })
}

async fn undo(State(sessions): State<Arc<Sessions>>, Path(id): Path<String>) -> ApiResult<Json<SessionState>> {
    with_session(&sessions, &id, |s| {
        let (_, before) = s.history.pop().ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "nothing to undo"))?;
        s.engine = before;
        s.snapshot().map(Json)
    })
}

async fn remove(State(sessions): State<Arc<Sessions>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let removed = sessions.map.lock().expect("session map poisoned").remove(&id);
    removed.map(|_| StatusCode::NO_CONTENT).ok_or_else(|| ApiError::not_found(&id))
}

async fn trace(State(sessions): State<Arc<Sessions>>, Path(id): Path<String>) -> ApiResult<Response> {
    let body = with_session(&sessions, &id, |s| s.trace())?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

#[derive(Debug, Serialize)]
struct ProtocolInfo {
    name: &'static str,
    instances: &'static str,
    example: Option<Example>,
}

#[derive(Debug, Serialize)]
struct Example {
    grid: &'static str,
    k: usize,
}

async fn protocols() -> Json<Vec<ProtocolInfo>> {
    let info = |name: &'static str| {
        let (instances, example) = match name {
            "general3" => ("3 robots on any grid whose longer side exceeds 3", Some(Example { grid: "3x4", k: 3 })),
            "grid23" => ("3 robots on the 2x3 grid", Some(Example { grid: "2x3", k: 3 })),
            "five33" => ("5 robots on the 3x3 grid", Some(Example { grid: "3x3", k: 5 })),
            _ => ("one robot per node", Some(Example { grid: "1x3", k: 3 })),
        };
        ProtocolInfo { name, instances, example }
    };
    Json(PROTOCOL_NAMES.iter().map(|&n| info(n)).collect())
}

pub fn router(sessions: Arc<Sessions>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/:id", get(show).delete(remove))
        .route("/sessions/:id/actions", post(act))
        .route("/sessions/:id/undo", post(undo))
        .route("/sessions/:id/trace", get(trace))
        .route("/meta/protocols", get(protocols))
        .with_state(sessions);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the process is stopped, sweeping idle sessions every minute.
pub async fn serve(host: &str, port: u16, static_dir: Option<PathBuf>, idle_expiry: Duration) -> anyhow::Result<()> {
    let sessions = Arc::new(Sessions::new(idle_expiry));
    let sweeper = sessions.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.expire_idle(Instant::now());
        }
    });
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(sessions, static_dir)).await?;
    Ok(())
}
