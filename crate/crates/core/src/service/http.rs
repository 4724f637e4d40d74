//! JSON/PNG HTTP API over a [`SessionStore`].
//!
//! Status codes: 404 unknown session, 409 busy, 422 invalid payload,
//! 502 backend failure. Error bodies are `{"error": "..."}`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, WireError};
use crate::fixtures;
use crate::image_buf;
use crate::mesh::load_obj;
use crate::raster::{RenderError, RenderMode};
use crate::synthesis::{SynthesisError, UndoStatus};

use super::{ServiceError, Session, SessionStore, SynthesisConfig};

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::Busy => StatusCode::CONFLICT,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidInput(_)
            | ServiceError::Mesh(_)
            | ServiceError::Codec(_)
            | ServiceError::Render(RenderError::Camera(_))
            | ServiceError::Synthesis(SynthesisError::InvalidIterations)
            | ServiceError::Synthesis(SynthesisError::ShapeMismatch(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Backend(BackendError::InvalidRequest(_)) => StatusCode::INTERNAL_SERVER_ERROR,
            ServiceError::Backend(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(WireError { error: self.to_string() })).into_response()
    }
}

type ApiResult<T> = Result<T, ServiceError>;

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ServiceError::InvalidInput(format!("body: {e}")))
}

/// Runs `f` on the blocking pool.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e.to_string())))?
}

type Store = Arc<SessionStore>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    /// OBJ file contents.
    obj: Option<String>,
    /// Built-in mesh: `sphere` or `cube`.
    fixture: Option<String>,
    config: Option<SynthesisConfig>,
}

#[derive(Debug, Serialize)]
struct CreateReply {
    id: String,
    config: SynthesisConfig,
}

async fn create_session(State(store): State<Store>, body: Bytes) -> ApiResult<Json<CreateReply>> {
    let req: CreateBody = parse_body(&body)?;
    let session = blocking(move || {
        let mesh = match (req.obj, req.fixture.as_deref()) {
            (Some(obj), None) => load_obj(obj.as_bytes())?,
            (None, Some("sphere")) => fixtures::uv_sphere(32, 64),
            (None, Some("cube")) => load_obj(fixtures::unit_cube_obj().as_bytes())?,
            (None, Some(other)) => return Err(ServiceError::InvalidInput(format!("unknown fixture `{other}`"))),
            _ => return Err(ServiceError::InvalidInput("give exactly one of `obj` or `fixture`".into())),
        };
        store.create(mesh, req.config.unwrap_or_default())
    })
    .await?;
    Ok(Json(CreateReply { id: session.id().to_string(), config: session.config().clone() }))
}

fn query_f64(q: &HashMap<String, String>, key: &str, default: f64) -> ApiResult<f64> {
    match q.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| ServiceError::InvalidInput(format!("{key}: `{v}` is not a number"))),
    }
}

async fn render_view(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let session = store.get(&id)?;
    let elevation = query_f64(&q, "elevation", 0.0)?;
    let azimuth = query_f64(&q, "azimuth", 0.0)?;
    let mode = match q.get("mode") {
        Some(m) => m.parse::<RenderMode>().map_err(ServiceError::InvalidInput)?,
        None => RenderMode::Rgb,
    };
    let resolution = match q.get("resolution") {
        Some(r) => r
            .parse::<usize>()
            .ok()
            .filter(|r| (8..=4096).contains(r))
            .ok_or_else(|| ServiceError::InvalidInput(format!("resolution: `{r}` must be in [8, 4096]")))?,
        None => session.config().view_resolution,
    };
    let png = blocking(move || {
        let img = session.render_view(elevation, azimuth, mode, resolution)?;
        Ok(if img.channels() == 1 { image_buf::encode_gray16(&img)? } else { image_buf::encode_rgb8(&img)? })
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InpaintBody {
    #[serde(default)]
    elevation: f64,
    #[serde(default)]
    azimuth: f64,
    #[serde(default)]
    prompt: String,
    #[serde(default)]
    seed: u64,
}

async fn inpaint(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let session = store.get(&id)?;
    let req: InpaintBody = parse_body(&body)?;
    let report = blocking(move || session.inpaint_view(req.elevation, req.azimuth, &req.prompt, req.seed)).await?;
    Ok(Json(report).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AutoBody {
    #[serde(default)]
    prompt: String,
    #[serde(default)]
    seed: u64,
}

async fn auto(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let session = store.get(&id)?;
    let req: AutoBody = parse_body(&body)?;
    let report = blocking(move || session.run_auto(&req.prompt, req.seed)).await?;
    Ok(Json(report).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EraseBody {
    #[serde(default)]
    elevation: f64,
    #[serde(default)]
    azimuth: f64,
    /// Base64 PNG; nonzero pixels are erased.
    mask: String,
}

async fn erase(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let session = store.get(&id)?;
    let req: EraseBody =
        serde_json::from_slice(&body).map_err(|e| ServiceError::InvalidInput(format!("body: {e}")))?;
    let png = B64.decode(req.mask.as_bytes()).map_err(|e| ServiceError::InvalidInput(format!("mask: {e}")))?;
    let cleared = blocking(move || {
        let mask = image_buf::decode_mask(&png)?;
        session.erase(req.elevation, req.azimuth, &mask)
    })
    .await?;
    Ok(Json(serde_json::json!({ "cleared_texels": cleared })).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DilateBody {
    iterations: Option<usize>,
}

async fn dilate(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let session = store.get(&id)?;
    let req: DilateBody = parse_body(&body)?;
    let iterations = req.iterations.unwrap_or(session.config().dilate_iterations.max(1));
    let filled = blocking(move || session.dilate(iterations)).await?;
    Ok(Json(serde_json::json!({ "filled_texels": filled })).into_response())
}

async fn undo(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = store.get(&id)?;
    let (status, depth) = blocking(move || {
        let status = session.undo()?;
        Ok((status, session.history_depth()))
    })
    .await?;
    Ok(Json(serde_json::json!({ "restored": status == UndoStatus::Restored, "history_depth": depth }))
        .into_response())
}

async fn init(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = store.get(&id)?;
    blocking(move || session.init()).await?;
    Ok(Json(serde_json::json!({ "ok": true })).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SaveBody {
    path: Option<PathBuf>,
}

async fn save(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let session = store.get(&id)?;
    let req: SaveBody = parse_body(&body)?;
    let dir = req.path.unwrap_or_else(|| store.save_root().join(session.id()));
    let saved = blocking(move || session.save(&dir)).await?;
    Ok(Json(saved).into_response())
}

#[derive(Debug, Serialize)]
struct StateReply {
    config: SynthesisConfig,
    coverage: f64,
    history_depth: usize,
    busy: bool,
}

fn state_of(session: &Session) -> StateReply {
    StateReply {
        config: session.config().clone(),
        coverage: session.coverage(),
        history_depth: session.history_depth(),
        busy: session.is_busy(),
    }
}

async fn state(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = store.get(&id)?;
    let reply = blocking(move || Ok(state_of(&session))).await?;
    Ok(Json(reply).into_response())
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/render", get(render_view))
        .route("/sessions/{id}/inpaint", post(inpaint))
        .route("/sessions/{id}/auto", post(auto))
        .route("/sessions/{id}/erase", post(erase))
        .route("/sessions/{id}/dilate", post(dilate))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/init", post(init))
        .route("/sessions/{id}/save", post(save))
        .route("/sessions/{id}/state", get(state))
        .with_state(store)
}

/// Serves the API on `addr` until the process exits.
pub async fn serve(addr: SocketAddr, store: Arc<SessionStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store)).await
}
