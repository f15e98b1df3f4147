//! Rater-console HTTP API over a workspace directory.
//!
//! | route | purpose |
//! |---|---|
//! | `GET /health` | liveness |
//! | `GET /rubric` | scoring dimensions and maxima |
//! | `GET /sessions`, `GET /sessions/{id}` | blind session listings |
//! | `GET /responses/{id}` | one response's six step answers, parsed |
//! | `GET/PUT /scores/{response}/{rater}` | a rater's sheet, versioned |
//! | `GET /consistency/{session}` | pairwise PCC, ICC and calibration cases |
//! | `GET /calibration`, `POST /calibration/{case}/assign` | third-rater workflow |
//!
//! Writes are serialized through one mutex around the sheet store.

mod error;

use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::routing::{get, post};
use axum::{Json, Router};
use teamharness_core::scoring::{CalibrationCase, Dimension, Rubric, CALIBRATION_THRESHOLD};
use teamharness_core::workspace::api::{AssignRequest, ScoreSubmission, StoredSheet};
use teamharness_core::workspace::{
    submit_sheet, ConsistencyReport, ResponseView, SessionView, SheetStore, SubmitOutcome, Workspace, WorkspaceError,
};

pub use error::ApiError;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub root: PathBuf,
    /// Shared bearer token; `None` leaves the API open.
    pub token: Option<String>,
    pub threshold: f64,
}

impl ServerConfig {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            token: None,
            threshold: CALIBRATION_THRESHOLD,
        }
    }
}

struct Inner {
    ws: Workspace,
    rubric: Rubric,
    store: Mutex<SheetStore>,
    token: Option<String>,
    threshold: f64,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn open(config: ServerConfig) -> Result<Self, WorkspaceError> {
        let ws = Workspace::open(&config.root)?;
        let store = ws.sheet_store()?;
        Ok(Self(Arc::new(Inner {
            ws,
            rubric: Rubric::cgpst(),
            store: Mutex::new(store),
            token: config.token,
            threshold: config.threshold,
        })))
    }

    fn store(&self) -> MutexGuard<'_, SheetStore> {
        // a panicked writer leaves the store as it was before the append
        self.0.store.lock().unwrap_or_else(|p| p.into_inner())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn health() -> &'static str {
    "ok"
}

async fn rubric(State(s): State<AppState>) -> Json<Vec<Dimension>> {
    Json(s.0.rubric.dimensions().to_vec())
}

async fn sessions(State(s): State<AppState>) -> ApiResult<Vec<SessionView>> {
    let store = s.store();
    let views =
        s.0.ws
            .sessions()?
            .iter()
            .map(|session| s.0.ws.session_view(&session.id, &store))
            .collect::<Result<_, _>>()?;
    Ok(Json(views))
}

async fn session(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionView> {
    let store = s.store();
    Ok(Json(s.0.ws.session_view(&id, &store)?))
}

async fn response(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<ResponseView> {
    Ok(Json(s.0.ws.response_view(&id)?))
}

async fn get_score(
    State(s): State<AppState>,
    Path((response_id, rater_id)): Path<(String, String)>,
) -> ApiResult<StoredSheet> {
    s.0.ws.locate_response(&response_id)?;
    let store = s.store();
    let sheet = store.latest(&response_id, &rater_id).cloned().ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            format!("no sheet from {rater_id} for {response_id}"),
        )
    })?;
    Ok(Json(StoredSheet {
        version: store.version(&response_id, &rater_id),
        sheet,
    }))
}

async fn put_score(
    State(s): State<AppState>,
    Path((response_id, rater_id)): Path<(String, String)>,
    Json(body): Json<ScoreSubmission>,
) -> ApiResult<SubmitOutcome> {
    s.0.ws.locate_response(&response_id)?;
    let expected = body.expected_version;
    let sheet = body.into_sheet(&response_id, &rater_id);
    let mut store = s.store();
    Ok(Json(submit_sheet(
        &mut store,
        &s.0.rubric,
        sheet,
        expected,
        s.0.threshold,
    )?))
}

async fn consistency(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<ConsistencyReport> {
    let store = s.store();
    Ok(Json(s.0.ws.consistency(&id, &store, &s.0.rubric, s.0.threshold)?))
}

async fn cases(State(s): State<AppState>) -> Json<Vec<CalibrationCase>> {
    Json(s.store().ledger().cases().cloned().collect())
}

async fn assign(
    State(s): State<AppState>,
    Path(case_id): Path<String>,
    Json(body): Json<AssignRequest>,
) -> ApiResult<CalibrationCase> {
    let mut store = s.store();
    let case = store
        .ledger_mut()
        .assign(&case_id, &body.rater_id)
        .map_err(WorkspaceError::from)?;
    Ok(Json(case))
}

async fn require_token(State(s): State<AppState>, request: Request, next: Next) -> Result<Response, ApiError> {
    if let Some(token) = &s.0.token {
        let presented = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token.as_str()) {
            return Err(ApiError::new(StatusCode::UNAUTHORIZED, "missing or wrong bearer token"));
        }
    }
    Ok(next.run(request).await)
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/rubric", get(rubric))
        .route("/sessions", get(sessions))
        .route("/sessions/{id}", get(session))
        .route("/responses/{id}", get(response))
        .route("/scores/{response_id}/{rater_id}", get(get_score).put(put_score))
        .route("/consistency/{session_id}", get(consistency))
        .route("/calibration", get(cases))
        .route("/calibration/{case_id}/assign", post(assign))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new().route("/health", get(health)).merge(api).with_state(state)
}

/// Serves on an already bound listener until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, config: ServerConfig) -> std::io::Result<()> {
    let root = config.root.clone();
    let state = AppState::open(config).map_err(std::io::Error::other)?;
    tracing::info!(addr = %listener.local_addr()?, root = %root.display(), "rater API listening");
    serve_router(listener, router(state)).await
}

pub async fn serve_router(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}
