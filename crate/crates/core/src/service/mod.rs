//! Painting sessions, the view-by-view synthesis loop, prompt assembly, and
//! the HTTP API that drives them.

mod config;
mod http;
mod session;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::backend::{BackendError, InpaintBackend};
use crate::camera::CameraError;
use crate::image_buf::CodecError;
use crate::mesh::{Mesh, MeshError};
use crate::raster::RenderError;
use crate::synthesis::SynthesisError;

pub use config::{
    assemble_prompt, directional_prompt, parse_views, preset_cameras, SynthesisConfig, DEFAULT_DILATE_ITERATIONS,
    DEFAULT_NEGATIVE_PROMPT, DEFAULT_POSITIVE_SUFFIX,
};
pub use http::{router, serve};
pub use session::{RunReport, SavedSession, Session, ViewReport, META_FILE, TEXTURE_FILE, VIEW_COS_FILE, WEIGHT_FILE};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("session is busy with another operation")]
    Busy,
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<CameraError> for ServiceError {
    fn from(e: CameraError) -> Self {
        ServiceError::InvalidInput(e.to_string())
    }
}

/// In-memory registry of sessions sharing one backend.
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    backend: Arc<dyn InpaintBackend>,
    save_root: PathBuf,
}

impl SessionStore {
    /// Sessions saved without an explicit path go under `save_root/<id>`.
    pub fn new(backend: Arc<dyn InpaintBackend>, save_root: impl Into<PathBuf>) -> Self {
        Self { sessions: RwLock::new(HashMap::new()), backend, save_root: save_root.into() }
    }

    pub fn backend(&self) -> &Arc<dyn InpaintBackend> {
        &self.backend
    }

    pub fn save_root(&self) -> &std::path::Path {
        &self.save_root
    }

    pub fn create(&self, mesh: Mesh, config: SynthesisConfig) -> Result<Arc<Session>, ServiceError> {
        let session = Arc::new(Session::new(mesh, config, self.backend.clone())?);
        self.insert(session.clone());
        Ok(session)
    }

    pub fn insert(&self, session: Arc<Session>) {
        self.sessions.write().expect("store lock").insert(session.id().to_string(), session);
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, ServiceError> {
        self.sessions.read().expect("store lock").get(id).cloned().ok_or_else(|| ServiceError::NotFound(id.into()))
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
