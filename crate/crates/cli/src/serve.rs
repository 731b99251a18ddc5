use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;

use granule_core::harvest::scalar_range;
use granule_core::insitu::FrameShard;
use granule_core::io::{config_schema, encode_shard, parse_config, read_trajectory, to_config_json, FormatError};
use granule_core::{Bounds, Provenance, RolloutResult, ScalarField};

use crate::commands::{valid_id, Workspace};

pub const OCTET_STREAM: &str = "application/octet-stream";

struct AppState {
    ws: Workspace,
    /// Serializes config writes.
    write_lock: Mutex<()>,
}

type Shared = Arc<AppState>;

pub fn router(root: impl Into<PathBuf>) -> Router {
    let state = Arc::new(AppState {
        ws: Workspace::new(root),
        write_lock: Mutex::new(()),
    });
    Router::new()
        .route("/api/rollouts", get(list_rollouts))
        .route("/api/rollouts/{id}/meta", get(rollout_meta))
        .route("/api/rollouts/{id}/frames/{n}", get(rollout_frame))
        .route("/api/configs", get(list_configs).post(post_config))
        .route("/api/schema", get(schema))
        .with_state(state)
}

pub async fn serve(root: PathBuf, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    log::info!("serving {} on http://{}", root.display(), listener.local_addr()?);
    axum::serve(listener, router(root)).await
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

#[derive(Debug, Serialize)]
struct RolloutSummary {
    id: String,
    frames: usize,
    dt: f64,
    particles: usize,
    dim: usize,
    provenance: Provenance,
}

#[derive(Debug, Serialize)]
struct RolloutMeta {
    #[serde(flatten)]
    summary: RolloutSummary,
    duration: f64,
    bounds: Bounds,
    displacement_range: [f64; 2],
}

fn summary(id: &str, r: &RolloutResult) -> RolloutSummary {
    RolloutSummary {
        id: id.to_string(),
        frames: r.frames.len(),
        dt: r.dt,
        particles: r.num_particles(),
        dim: r.dim(),
        provenance: r.provenance,
    }
}

fn load(state: &AppState, id: &str) -> Result<RolloutResult, Box<Response>> {
    if !valid_id(id) {
        return Err(Box::new(error(StatusCode::NOT_FOUND, format!("no rollout {id:?}"))));
    }
    let path = state.ws.rollouts().join(format!("{id}.gtraj"));
    if !path.is_file() {
        return Err(Box::new(error(StatusCode::NOT_FOUND, format!("no rollout {id:?}"))));
    }
    read_trajectory(&path).map_err(|e| Box::new(error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())))
}

fn files_with_ext(dir: &std::path::Path, ext: &str) -> Vec<(String, PathBuf)> {
    let mut out: Vec<(String, PathBuf)> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == ext))
        .filter_map(|p| Some((p.file_stem()?.to_str()?.to_string(), p)))
        .collect();
    out.sort();
    out
}

async fn list_rollouts(State(state): State<Shared>) -> Response {
    let list: Vec<RolloutSummary> = files_with_ext(&state.ws.rollouts(), "gtraj")
        .into_iter()
        .filter_map(|(id, path)| match read_trajectory(&path) {
            Ok(r) => Some(summary(&id, &r)),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                None
            }
        })
        .collect();
    Json(list).into_response()
}

async fn rollout_meta(State(state): State<Shared>, Path(id): Path<String>) -> Response {
    let r = match load(&state, &id) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    let (lo, hi) = scalar_range(&r, ScalarField::Displacement).unwrap_or((0.0, 0.0));
    Json(RolloutMeta {
        summary: summary(&id, &r),
        duration: r.duration(),
        bounds: r.bounds.clone(),
        displacement_range: [lo, hi],
    })
    .into_response()
}

/// JSON frame by default; the binary shard encoding when the client accepts
/// only `application/octet-stream`.
async fn rollout_frame(State(state): State<Shared>, Path((id, n)): Path<(String, usize)>, headers: HeaderMap) -> Response {
    let r = match load(&state, &id) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    let Some(frame) = r.frames.get(n) else {
        return error(
            StatusCode::NOT_FOUND,
            format!("frame {n} out of range, rollout {id} has {} frames", r.frames.len()),
        );
    };
    let binary = headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains(OCTET_STREAM) && !v.contains("json"));
    if binary {
        let shard = FrameShard {
            rank: 0,
            step: frame.step,
            time: frame.time,
            dim: frame.dim,
            ids: (0..frame.len() as u64).collect(),
            positions: frame.positions.clone(),
            velocities: frame.velocities.clone(),
            displacement: frame.displacement.clone(),
        };
        return ([(header::CONTENT_TYPE, OCTET_STREAM)], encode_shard(&shard)).into_response();
    }
    Json(frame).into_response()
}

async fn list_configs(State(state): State<Shared>) -> Response {
    let list: Vec<Value> = files_with_ext(&state.ws.configs(), "json")
        .into_iter()
        .filter_map(|(id, path)| {
            let text = fs::read_to_string(&path).ok()?;
            let config = parse_config(&text).ok()?;
            Some(json!({ "id": id, "config": config }))
        })
        .collect();
    Json(list).into_response()
}

async fn post_config(State(state): State<Shared>, body: String) -> Response {
    let config = match parse_config(&body) {
        Ok(c) => c,
        Err(FormatError::Config(errors)) => {
            return (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "errors": errors.0 }))).into_response();
        }
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let id: String = config
        .run_label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .take(64)
        .collect();
    let id = if id.is_empty() { "config".to_string() } else { id };
    let _guard = state.write_lock.lock().await;
    let dir = state.ws.configs();
    let path = dir.join(format!("{id}.json"));
    let written = fs::create_dir_all(&dir).and_then(|_| {
        let tmp = dir.join(format!(".{id}.json.tmp"));
        fs::write(&tmp, to_config_json(&config))?;
        fs::rename(&tmp, &path)
    });
    match written {
        Ok(()) => (StatusCode::CREATED, Json(json!({ "id": id, "path": path }))).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn schema() -> Response {
    ([(header::CONTENT_TYPE, "application/schema+json")], config_schema()).into_response()
}
