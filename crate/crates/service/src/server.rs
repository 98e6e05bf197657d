//! Session HTTP API.
//!
//! | route | purpose |
//! |---|---|
//! | `POST /sessions` | create from `{task, method, backend?, seed?}` |
//! | `GET /sessions/{id}` | full session state |
//! | `POST /sessions/{id}/moves` | apply `{object_id, target_position}` |
//! | `POST /sessions/{id}/infer` | run the session method over its history |
//! | `GET /sessions/{id}/render/{step}.png` | rendered scene step |
//! | `GET /sessions/{id}/changes?since=REV` | long-poll until revision > REV |
//!
//! Errors are JSON `{error, message}` with 404 for unknown sessions, steps
//! and objects, 409 for rejected moves and overlapping inference, 422 for
//! malformed bodies and 502 for backend failures.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{watch, RwLock};
use tower_http::services::ServeDir;
use vpi_core::baselines::BaselineError;
use vpi_core::covr::CovrError;
use vpi_core::method::{Method, MethodConfig, MethodError};
use vpi_core::render::{render_png, RenderOptions};
use vpi_core::scene::{Move, Point, Scene, SceneError, Task};

use crate::backend::{infer_scenes, BackendChoice, InferError};
use crate::session::{MoveError, Session};

const DEFAULT_POLL: Duration = Duration::from_secs(25);
const MAX_POLL: Duration = Duration::from_secs(120);

struct Slot {
    session: RwLock<Session>,
    inferring: AtomicBool,
    revision: watch::Sender<u64>,
}

impl Slot {
    fn new(session: Session) -> Arc<Self> {
        let (revision, _) = watch::channel(session.revision);
        Arc::new(Self {
            session: RwLock::new(session),
            inferring: AtomicBool::new(false),
            revision,
        })
    }
}

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
    next_id: AtomicU64,
    config: MethodConfig,
}

impl AppState {
    pub fn new(config: MethodConfig) -> Arc<Self> {
        Arc::new(Self {
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            config,
        })
    }

    /// Every session, ordered by id.
    pub async fn snapshot(&self) -> Vec<Session> {
        let slots: Vec<Arc<Slot>> = self.sessions.read().await.values().cloned().collect();
        let mut out = Vec::with_capacity(slots.len());
        for slot in slots {
            out.push(slot.session.read().await.clone());
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    pub async fn restore(&self, sessions: Vec<Session>) {
        let mut map = self.sessions.write().await;
        for s in sessions {
            if let Some(n) = s.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                self.next_id.fetch_max(n + 1, Ordering::Relaxed);
            }
            map.insert(s.id.clone(), Slot::new(s));
        }
    }

    async fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UnknownSession", format!("no session {id:?}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.kind, "message": self.message}))).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "MalformedBody", e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    task: Task,
    method: Method,
    #[serde(default)]
    backend: Option<BackendChoice>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct SceneAtRevision<'a> {
    id: &'a str,
    scene: &'a Scene,
    revision: u64,
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let n = app.next_id.fetch_add(1, Ordering::Relaxed);
    let id = format!("s{n}");
    let session = Session::new(
        id.clone(),
        req.task,
        req.method,
        req.backend.unwrap_or_default(),
        req.seed.unwrap_or(n),
    )
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "GenerationFailure", e.to_string()))?;
    let body = serde_json::to_value(SceneAtRevision {
        id: &id,
        scene: session.head(),
        revision: session.revision,
    })
    .expect("scene serializes");
    app.sessions.write().await.insert(id, Slot::new(session));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = app.slot(&id).await?;
    let session = slot.session.read().await;
    Ok(Json(&*session).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveBody {
    object_id: u32,
    target_position: Point,
}

async fn post_move(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let slot = app.slot(&id).await?;
    let req: MoveBody = parse_body(&body)?;
    let mut session = slot.session.write().await;
    let applied = session.apply(Move::new(req.object_id, req.target_position));
    match applied {
        Ok(_) => {
            let rev = session.revision;
            let out = json!({
                "scene": session.head(),
                "revision": rev,
                "step": session.scenes.len() - 1,
            });
            drop(session);
            slot.revision.send_replace(rev);
            Ok(Json(out).into_response())
        }
        Err(e) => {
            let status = match e {
                MoveError::Scene(SceneError::UnknownObject(_)) => StatusCode::NOT_FOUND,
                _ => StatusCode::CONFLICT,
            };
            Err(ApiError::new(status, e.kind(), e.to_string()))
        }
    }
}

/// Clears the in-flight flag however the handler exits.
struct InferGuard<'a>(&'a AtomicBool);

impl Drop for InferGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

fn infer_error(e: InferError) -> ApiError {
    let bad_gateway = |m: String| ApiError::new(StatusCode::BAD_GATEWAY, "BackendFailure", m);
    match e {
        InferError::Method(MethodError::Covr(CovrError::TooFewImages { .. }))
        | InferError::Method(MethodError::Baseline(BaselineError::Backend(CovrError::TooFewImages { .. }))) => {
            ApiError::new(StatusCode::CONFLICT, "TooFewImages", e.to_string())
        }
        InferError::Method(MethodError::Covr(_))
        | InferError::Method(MethodError::Baseline(BaselineError::Backend(_)))
        | InferError::Method(MethodError::Baseline(BaselineError::MalformedResponse(_)))
        | InferError::Method(MethodError::Baseline(BaselineError::EmptyScene))
        | InferError::Setup(_) => bad_gateway(e.to_string()),
        other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "InferenceFailed", other.to_string()),
    }
}

async fn post_infer(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = app.slot(&id).await?;
    if slot
        .inferring
        .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
        .is_err()
    {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "InferenceInProgress",
            "an inference for this session is already running",
        ));
    }
    let _guard = InferGuard(&slot.inferring);
    let (task, method, backend, scenes) = {
        let s = slot.session.read().await;
        (s.task, s.method, s.backend.clone(), s.scenes.clone())
    };
    let steps = scenes.len();
    let config = app.config.clone();
    let result = tokio::task::spawn_blocking(move || infer_scenes(task, &scenes, method, &backend, &config))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "InferenceFailed", e.to_string()))?
        .map_err(infer_error)?;
    let mut session = slot.session.write().await;
    session.store_inference(steps, result.clone());
    let rev = session.revision;
    drop(session);
    slot.revision.send_replace(rev);
    Ok(Json(result).into_response())
}

async fn get_render(
    State(app): State<Arc<AppState>>,
    Path((id, file)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let slot = app.slot(&id).await?;
    let unknown = || ApiError::new(StatusCode::NOT_FOUND, "UnknownStep", format!("no step {file:?}"));
    let step: usize = file
        .strip_suffix(".png")
        .and_then(|s| s.parse().ok())
        .ok_or_else(unknown)?;
    let scene = slot.session.read().await.scenes.get(step).cloned().ok_or_else(unknown)?;
    let options: RenderOptions = app.config.render.clone();
    let png = tokio::task::spawn_blocking(move || render_png(&scene, &options))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "RenderFailed", e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "RenderFailed", e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Deserialize)]
struct ChangesQuery {
    #[serde(default)]
    since: u64,
    /// Longest wait in milliseconds before answering 204.
    #[serde(default)]
    timeout_ms: Option<u64>,
}

async fn get_changes(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ChangesQuery>,
) -> Result<Response, ApiError> {
    let slot = app.slot(&id).await?;
    let wait = q.timeout_ms.map(Duration::from_millis).unwrap_or(DEFAULT_POLL).min(MAX_POLL);
    let mut rx = slot.revision.subscribe();
    let changed = matches!(
        tokio::time::timeout(wait, rx.wait_for(|rev| *rev > q.since)).await,
        Ok(Ok(_))
    );
    match changed {
        true => {
            let session = slot.session.read().await;
            Ok(Json(&*session).into_response())
        }
        false => Ok(StatusCode::NO_CONTENT.into_response()),
    }
}

pub fn router(app: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/moves", post(post_move))
        .route("/sessions/{id}/infer", post(post_infer))
        .route("/sessions/{id}/render/{file}", get(get_render))
        .route("/sessions/{id}/changes", get(get_changes))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
