//! The depth-aware inpainting contract, the denoising mask schedule, a
//! deterministic mock backend, and an HTTP client and server for the
//! JSON wire protocol.
//!
//! Requests always travel at a fixed 512 x 512 resolution. Images are base64
//! PNG on the wire: rgb as 8-bit RGB, masks as 8-bit gray in {0, 255}, depth
//! as 16-bit gray.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tokio::sync::oneshot;

use crate::image_buf::{self, to_u8, CodecError, Image, Mask};

pub const PROTOCOL_RESOLUTION: usize = 512;
pub const DEFAULT_STEPS: u32 = 20;
pub const DEFAULT_REFINE_STRENGTH: f64 = 0.4;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// Environment variable naming the default remote backend.
pub const BACKEND_URL_ENV: &str = "INTEX_BACKEND_URL";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend timed out: {0}")]
    Timeout(String),
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("backend failed: {0}")]
    Remote(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl From<CodecError> for BackendError {
    fn from(e: CodecError) -> Self {
        BackendError::Protocol(e.to_string())
    }
}

/// One inpainting job.
#[derive(Debug, Clone, PartialEq)]
pub struct InpaintRequest {
    /// Current render, 3 channels; unpainted pixels are 0.5 gray and the
    /// masks say which pixels are authoritative.
    pub image_masked: Image,
    pub generate_mask: Mask,
    pub refine_mask: Mask,
    /// 1 channel, nearer = 1, background 0.
    pub depth: Image,
    pub prompt: String,
    pub negative_prompt: String,
    pub seed: u64,
    pub steps: u32,
    pub refine_strength: f64,
}

impl InpaintRequest {
    pub fn validate(&self) -> Result<(), BackendError> {
        let n = PROTOCOL_RESOLUTION;
        let bad = |what: &str, got: String| BackendError::InvalidRequest(format!("{what} must be {n}x{n}, got {got}"));
        if (self.image_masked.width(), self.image_masked.height(), self.image_masked.channels()) != (n, n, 3) {
            return Err(bad("image_masked", self.image_masked.shape_string()));
        }
        if (self.depth.width(), self.depth.height(), self.depth.channels()) != (n, n, 1) {
            return Err(bad("depth", self.depth.shape_string()));
        }
        for (name, m) in [("generate_mask", &self.generate_mask), ("refine_mask", &self.refine_mask)] {
            if (m.width(), m.height()) != (n, n) {
                return Err(bad(name, format!("{}x{}", m.width(), m.height())));
            }
        }
        if !self.generate_mask.is_disjoint(&self.refine_mask) {
            return Err(BackendError::InvalidRequest("generate_mask and refine_mask overlap".into()));
        }
        if !(0.0..=1.0).contains(&self.refine_strength) {
            return Err(BackendError::InvalidRequest(format!("refine_strength {} outside [0, 1]", self.refine_strength)));
        }
        if self.steps == 0 {
            return Err(BackendError::InvalidRequest("steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InpaintResponse {
    pub image: Image,
    pub backend_id: String,
    pub elapsed_ms: u64,
}

/// Editable region at denoising step `step` of `steps`: only `generate`
/// while `step <= (1 - alpha) * steps`, then `generate` and `refine`.
pub fn mask_at_step(step: usize, steps: usize, alpha: f64, generate: &Mask, refine: &Mask) -> Mask {
    if (step as f64) <= (1.0 - alpha) * steps as f64 {
        generate.clone()
    } else {
        generate.union(refine)
    }
}

pub trait InpaintBackend: Send + Sync {
    fn id(&self) -> String;
    fn inpaint(&self, request: &InpaintRequest) -> Result<InpaintResponse, BackendError>;
}

/// Deterministic stand-in for a diffusion model.
///
/// Generate pixels get a smooth seeded color pattern mixed half and half with
/// depth; refine pixels mix the pattern half and half with the input. Every
/// other pixel is returned untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend;

pub const MOCK_BACKEND_ID: &str = "mock";

/// Lattice spacing of the mock pattern, in pixels.
const MOCK_CELL: usize = 32;

impl MockBackend {
    pub fn shared() -> Arc<dyn InpaintBackend> {
        Arc::new(MockBackend)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn lattice(key: u64, x: usize, y: usize, c: usize) -> f32 {
    let h = splitmix64(key ^ splitmix64((x as u64) << 32 | y as u64) ^ splitmix64(c as u64 + 0x51));
    (h >> 40) as f32 / (1u64 << 24) as f32
}

fn smooth(t: f32) -> f32 {
    t * t * (3.0 - 2.0 * t)
}

/// Smooth value noise in [0, 1] keyed by seed and prompt.
fn mock_pattern(key: u64, x: usize, y: usize, c: usize) -> f32 {
    let (gx, gy) = (x / MOCK_CELL, y / MOCK_CELL);
    let tx = smooth((x % MOCK_CELL) as f32 / MOCK_CELL as f32);
    let ty = smooth((y % MOCK_CELL) as f32 / MOCK_CELL as f32);
    let top = lattice(key, gx, gy, c) * (1.0 - tx) + lattice(key, gx + 1, gy, c) * tx;
    let bottom = lattice(key, gx, gy + 1, c) * (1.0 - tx) + lattice(key, gx + 1, gy + 1, c) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// The mock backend as a pure function of the request.
pub fn mock_inpaint(request: &InpaintRequest) -> InpaintResponse {
    let digest = Sha256::digest(request.prompt.as_bytes());
    let prompt_key = u64::from_le_bytes(digest[..8].try_into().expect("digest length"));
    let key = splitmix64(request.seed) ^ prompt_key;
    let mut image = request.image_masked.clone();
    let w = image.width();
    for p in 0..image.pixel_count() {
        let generate = request.generate_mask.at(p);
        if !generate && !request.refine_mask.at(p) {
            continue;
        }
        let (x, y) = (p % w, p / w);
        let depth = request.depth.data()[p];
        for c in 0..3 {
            let pattern = mock_pattern(key, x, y, c);
            let other = if generate { depth } else { image.at(p)[c] };
            image.at_mut(p)[c] = to_u8(0.5 * pattern + 0.5 * other) as f32 / 255.0;
        }
    }
    InpaintResponse { image, backend_id: MOCK_BACKEND_ID.into(), elapsed_ms: 0 }
}

impl InpaintBackend for MockBackend {
    fn id(&self) -> String {
        MOCK_BACKEND_ID.into()
    }

    fn inpaint(&self, request: &InpaintRequest) -> Result<InpaintResponse, BackendError> {
        request.validate()?;
        Ok(mock_inpaint(request))
    }
}

/// JSON body of `POST /inpaint`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub image_masked: String,
    pub generate_mask: String,
    pub refine_mask: String,
    pub depth: String,
    pub prompt: String,
    pub negative_prompt: String,
    pub seed: u64,
    pub steps: u32,
    pub refine_strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub image: String,
    pub backend_id: String,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub error: String,
}

fn b64_png(bytes: Vec<u8>) -> String {
    B64.encode(bytes)
}

fn png_from_b64(field: &str, text: &str) -> Result<Vec<u8>, BackendError> {
    B64.decode(text).map_err(|e| BackendError::Protocol(format!("{field}: bad base64: {e}")))
}

fn check_size(field: &str, width: usize, height: usize) -> Result<(), BackendError> {
    if (width, height) == (PROTOCOL_RESOLUTION, PROTOCOL_RESOLUTION) {
        Ok(())
    } else {
        Err(BackendError::Protocol(format!(
            "{field} is {width}x{height}, expected {PROTOCOL_RESOLUTION}x{PROTOCOL_RESOLUTION}"
        )))
    }
}

impl WireRequest {
    pub fn encode(request: &InpaintRequest) -> Result<WireRequest, BackendError> {
        request.validate()?;
        Ok(WireRequest {
            image_masked: b64_png(image_buf::encode_rgb8(&request.image_masked)?),
            generate_mask: b64_png(image_buf::encode_mask(&request.generate_mask)?),
            refine_mask: b64_png(image_buf::encode_mask(&request.refine_mask)?),
            depth: b64_png(image_buf::encode_gray16(&request.depth)?),
            prompt: request.prompt.clone(),
            negative_prompt: request.negative_prompt.clone(),
            seed: request.seed,
            steps: request.steps,
            refine_strength: request.refine_strength,
        })
    }

    pub fn decode(&self) -> Result<InpaintRequest, BackendError> {
        let image_masked = image_buf::decode_rgb(&png_from_b64("image_masked", &self.image_masked)?)?;
        check_size("image_masked", image_masked.width(), image_masked.height())?;
        let generate_mask = image_buf::decode_mask(&png_from_b64("generate_mask", &self.generate_mask)?)?;
        check_size("generate_mask", generate_mask.width(), generate_mask.height())?;
        let refine_mask = image_buf::decode_mask(&png_from_b64("refine_mask", &self.refine_mask)?)?;
        check_size("refine_mask", refine_mask.width(), refine_mask.height())?;
        let depth = image_buf::decode_gray(&png_from_b64("depth", &self.depth)?)?;
        check_size("depth", depth.width(), depth.height())?;
        let request = InpaintRequest {
            image_masked,
            generate_mask,
            refine_mask,
            depth,
            prompt: self.prompt.clone(),
            negative_prompt: self.negative_prompt.clone(),
            seed: self.seed,
            steps: self.steps,
            refine_strength: self.refine_strength,
        };
        request.validate()?;
        Ok(request)
    }
}

impl WireResponse {
    pub fn encode(response: &InpaintResponse) -> Result<WireResponse, BackendError> {
        Ok(WireResponse {
            image: b64_png(image_buf::encode_rgb8(&response.image)?),
            backend_id: response.backend_id.clone(),
            elapsed_ms: response.elapsed_ms,
        })
    }

    pub fn decode(&self) -> Result<InpaintResponse, BackendError> {
        let image = image_buf::decode_rgb(&png_from_b64("image", &self.image)?)?;
        check_size("image", image.width(), image.height())?;
        Ok(InpaintResponse { image, backend_id: self.backend_id.clone(), elapsed_ms: self.elapsed_ms })
    }
}

/// Client for a backend speaking the wire protocol over HTTP.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    url: String,
    timeout: Duration,
}

impl RemoteBackend {
    /// `endpoint` is either the full `/inpaint` URL or the server root.
    pub fn new(endpoint: &str) -> Self {
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/inpaint") { trimmed.to_string() } else { format!("{trimmed}/inpaint") };
        Self { url, timeout: DEFAULT_TIMEOUT }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

fn classify(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        BackendError::Timeout(e.to_string())
    } else if e.is_connect() {
        BackendError::Unreachable(e.to_string())
    } else {
        BackendError::Protocol(e.to_string())
    }
}

impl InpaintBackend for RemoteBackend {
    fn id(&self) -> String {
        format!("remote:{}", self.url)
    }

    fn inpaint(&self, request: &InpaintRequest) -> Result<InpaintResponse, BackendError> {
        let body = WireRequest::encode(request)?;
        // Built per call: a blocking client must not be dropped on an async
        // runtime thread, and callers may hold this backend from one.
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .connect_timeout(self.timeout)
            .build()
            .map_err(classify)?;
        let response = client.post(&self.url).json(&body).send().map_err(classify)?;
        let status = response.status();
        let bytes = response.bytes().map_err(classify)?;
        if !status.is_success() {
            let message = serde_json::from_slice::<WireError>(&bytes)
                .map(|e| e.error)
                .unwrap_or_else(|_| String::from_utf8_lossy(&bytes).into_owned());
            return Err(BackendError::Remote(format!("HTTP {}: {message}", status.as_u16())));
        }
        let wire: WireResponse =
            serde_json::from_slice(&bytes).map_err(|e| BackendError::Protocol(format!("response body: {e}")))?;
        wire.decode()
    }
}

/// Where inpainting requests go.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Mock,
    Remote(String),
}

impl BackendSpec {
    /// `"mock"` or an http(s) URL.
    pub fn parse(s: &str) -> Result<Self, BackendError> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("mock") {
            Ok(BackendSpec::Mock)
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(BackendSpec::Remote(s.to_string()))
        } else {
            Err(BackendError::InvalidRequest(format!("backend must be 'mock' or an http(s) URL, got '{s}'")))
        }
    }

    /// The remote URL from the environment if set, otherwise the mock.
    pub fn from_env() -> Result<Self, BackendError> {
        match std::env::var(BACKEND_URL_ENV) {
            Ok(url) if !url.trim().is_empty() => Self::parse(&url),
            _ => Ok(BackendSpec::Mock),
        }
    }

    pub fn build(&self) -> Arc<dyn InpaintBackend> {
        match self {
            BackendSpec::Mock => MockBackend::shared(),
            BackendSpec::Remote(url) => Arc::new(RemoteBackend::new(url)),
        }
    }
}

fn error_response(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(WireError { error: message.into() })).into_response()
}

async fn handle_inpaint(State(backend): State<Arc<dyn InpaintBackend>>, body: Bytes) -> Response {
    let wire: WireRequest = match serde_json::from_slice(&body) {
        Ok(w) => w,
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, format!("invalid body: {e}")),
    };
    let result = tokio::task::spawn_blocking(move || {
        let request = wire.decode().map_err(|e| (StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
        let response = backend.inpaint(&request).map_err(|e| (StatusCode::BAD_GATEWAY, e.to_string()))?;
        WireResponse::encode(&response).map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
    })
    .await;
    match result {
        Ok(Ok(wire)) => Json(wire).into_response(),
        Ok(Err((status, message))) => error_response(status, message),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// Router exposing `backend` as `POST /inpaint`.
pub fn inpaint_router(backend: Arc<dyn InpaintBackend>) -> Router {
    Router::new().route("/inpaint", post(handle_inpaint)).with_state(backend)
}

/// An HTTP server on a background thread with its own runtime. Stops when
/// dropped.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    /// Serves `router` on `127.0.0.1` at an ephemeral port.
    pub fn spawn(router: Router) -> std::io::Result<ServerHandle> {
        let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
                let _ = axum::serve(listener, router)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        Ok(ServerHandle { addr, shutdown: Some(tx), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
