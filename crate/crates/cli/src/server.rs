//! The live-authoring HTTP API over one workspace.
//!
//! Readers take a shared lock on the session. A PUT evaluates the candidate
//! under that shared lock and swaps it in under the exclusive lock, so
//! readers always see the last accepted specification. Only one PUT runs at
//! a time; a concurrent one gets 409.

use std::sync::{Arc, RwLock};

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;
use urbankit::app::{Session, SessionError};
use urbankit::grammar::Level;

#[derive(Clone)]
pub struct AppState {
    session: Arc<RwLock<Session>>,
    writer: Arc<Mutex<()>>,
}

impl AppState {
    pub fn new(session: Session) -> AppState {
        AppState { session: Arc::new(RwLock::new(session)), writer: Arc::new(Mutex::new(())) }
    }

    /// Holding the returned guard makes concurrent PUTs fail with 409.
    pub async fn hold_updates(&self) -> tokio::sync::OwnedMutexGuard<()> {
        self.writer.clone().lock_owned().await
    }

    /// Runs `f` against the current session off the async workers.
    async fn read<T: Send + 'static>(
        &self,
        f: impl FnOnce(&Session) -> T + Send + 'static,
    ) -> Result<T, Response> {
        let session = self.session.clone();
        tokio::task::spawn_blocking(move || f(&session.read().expect("session lock")))
            .await
            .map_err(|e| error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/spec", get(get_spec).put(put_spec))
        .route("/api/knots", get(list_knots))
        .route("/api/knots/{name}/data", get(knot_data))
        .route("/api/layers/{name}/geometry", get(layer_geometry))
        .route("/api/plots/{index}/data", get(plot_data))
        .route("/api/scene", get(scene))
        .with_state(state)
}

fn json_bytes(status: StatusCode, bytes: Vec<u8>) -> Response {
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(bytes))
        .expect("static response parts")
}

fn json_value<T: Serialize>(status: StatusCode, value: &T) -> Response {
    let mut bytes = serde_json::to_vec(value).expect("payload serializes");
    bytes.push(b'\n');
    json_bytes(status, bytes)
}

fn error(status: StatusCode, message: &str) -> Response {
    json_value(status, &json!({ "error": message }))
}

fn session_error(e: SessionError) -> Response {
    match e {
        SessionError::NotFound { .. } => error(StatusCode::NOT_FOUND, &e.to_string()),
        other => error(StatusCode::INTERNAL_SERVER_ERROR, &other.to_string()),
    }
}

fn respond<T: Serialize>(r: Result<T, SessionError>) -> Response {
    match r {
        Ok(v) => json_value(StatusCode::OK, &v),
        Err(e) => session_error(e),
    }
}

async fn get_spec(State(state): State<AppState>) -> Response {
    match state.read(|s| s.spec_text()).await {
        Ok(Some(text)) => json_bytes(StatusCode::OK, text.into_bytes()),
        Ok(None) => error(StatusCode::NOT_FOUND, "no specification has been accepted yet"),
        Err(r) => r,
    }
}

async fn put_spec(State(state): State<AppState>, body: Bytes) -> Response {
    let Ok(_guard) = state.writer.try_lock() else {
        return error(StatusCode::CONFLICT, "another specification update is in progress");
    };
    let text = match String::from_utf8(body.to_vec()) {
        Ok(t) => t,
        Err(_) => return error(StatusCode::BAD_REQUEST, "body is not UTF-8"),
    };
    let session = state.session.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let prepared = session.read().expect("session lock").prepare(&text)?;
        Ok::<_, urbankit::app::Rejected>(session.write().expect("session lock").commit(prepared))
    })
    .await;
    match outcome {
        Ok(Ok(report)) => json_value(StatusCode::OK, &report),
        Ok(Err(rejected)) => json_value(
            StatusCode::UNPROCESSABLE_ENTITY,
            &json!({ "status": "rejected", "diagnostics": rejected.diagnostics }),
        ),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
    }
}

async fn list_knots(State(state): State<AppState>) -> Response {
    state.read(|s| json_value(StatusCode::OK, &s.knots())).await.unwrap_or_else(|r| r)
}

#[derive(Deserialize)]
struct LevelQuery {
    level: Option<String>,
}

async fn knot_data(State(state): State<AppState>, Path(name): Path<String>, Query(q): Query<LevelQuery>) -> Response {
    let level = match q.level.as_deref().map(str::parse::<Level>).transpose() {
        Ok(l) => l,
        Err(e) => return error(StatusCode::BAD_REQUEST, &e),
    };
    state
        .read(move |s| match s.knot_data(&name, level) {
            Ok(bytes) => json_bytes(StatusCode::OK, bytes),
            Err(e) => session_error(e),
        })
        .await
        .unwrap_or_else(|r| r)
}

async fn layer_geometry(State(state): State<AppState>, Path(name): Path<String>) -> Response {
    state.read(move |s| respond(s.layer_geometry(&name))).await.unwrap_or_else(|r| r)
}

async fn plot_data(State(state): State<AppState>, Path(index): Path<String>) -> Response {
    let Ok(index) = index.parse::<usize>() else {
        return error(StatusCode::NOT_FOUND, &format!("unknown plot `{index}`"));
    };
    state.read(move |s| respond(s.plot(index))).await.unwrap_or_else(|r| r)
}

async fn scene(State(state): State<AppState>) -> Response {
    state.read(|s| respond(s.scene())).await.unwrap_or_else(|r| r)
}

/// Serves until ctrl-c.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
