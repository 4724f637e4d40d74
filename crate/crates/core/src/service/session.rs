use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::backend::{InpaintBackend, InpaintRequest, PROTOCOL_RESOLUTION};
use crate::camera::OrbitCamera;
use crate::image_buf::{self, Image, Mask};
use crate::mesh::{self, normalize_mesh, save_textured_mesh, Mesh};
use crate::raster::{render, render_aux, GBuffer, RenderError, RenderMode};
use crate::synthesis::{blend_keep, compute_trimap, TextureState, TrimapCounts, UndoStatus, UpdateParams, UpdateReport};

use super::config::{assemble_prompt, preset_cameras, SynthesisConfig};
use super::ServiceError;

pub const TEXTURE_FILE: &str = "T.png";
pub const WEIGHT_FILE: &str = "W.png";
pub const VIEW_COS_FILE: &str = "V.png";
pub const META_FILE: &str = "meta.json";

/// Outcome of painting one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewReport {
    pub elevation: f64,
    pub azimuth: f64,
    pub trimap: TrimapCounts,
    pub prompt: String,
    /// False when nothing in the view was editable.
    pub backend_called: bool,
    pub backend_id: Option<String>,
    pub backend_elapsed_ms: u64,
    pub update: UpdateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub views: Vec<ViewReport>,
    pub dilated_texels: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionMeta {
    config: SynthesisConfig,
    /// `W.png` stores `W / weight_scale` in 16 bits.
    weight_scale: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedSession {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

/// One mesh being painted.
///
/// Mutating operations are serialized by a busy flag and fail with
/// [`ServiceError::Busy`] on contention. Each one works on a private copy of
/// the texture state and publishes it only on success, so readers always see
/// a consistent snapshot and failures leave nothing behind.
pub struct Session {
    id: String,
    mesh: Arc<Mesh>,
    config: SynthesisConfig,
    backend: Arc<dyn InpaintBackend>,
    state: RwLock<Arc<TextureState>>,
    busy: AtomicBool,
    uv_coverage: Mask,
}

struct BusyGuard<'a>(&'a AtomicBool);

impl Drop for BusyGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

fn new_session_id() -> String {
    format!("{:016x}", rand::random::<u64>())
}

impl Session {
    /// Normalizes `mesh` and starts from an unpainted atlas.
    pub fn new(mesh: Mesh, config: SynthesisConfig, backend: Arc<dyn InpaintBackend>) -> Result<Session, ServiceError> {
        let mesh = normalize_mesh(&mesh)?;
        config.validate()?;
        let state = TextureState::new(config.texture_resolution)?.with_history_limit(config.history_limit);
        Ok(Self::assemble(mesh, config, backend, state))
    }

    fn assemble(mesh: Mesh, config: SynthesisConfig, backend: Arc<dyn InpaintBackend>, state: TextureState) -> Session {
        let uv_coverage = mesh.uv_coverage(config.texture_resolution);
        Session {
            id: new_session_id(),
            mesh: Arc::new(mesh),
            config,
            backend,
            state: RwLock::new(Arc::new(state)),
            busy: AtomicBool::new(false),
            uv_coverage,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn config(&self) -> &SynthesisConfig {
        &self.config
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    pub fn is_busy(&self) -> bool {
        self.busy.load(Ordering::Acquire)
    }

    /// The current texture state. Cheap; never blocks on a running operation.
    pub fn snapshot(&self) -> Arc<TextureState> {
        self.state.read().expect("state lock").clone()
    }

    pub fn history_depth(&self) -> usize {
        self.snapshot().history_depth()
    }

    /// Texels that some UV triangle covers.
    pub fn uv_coverage_mask(&self) -> &Mask {
        &self.uv_coverage
    }

    /// Fraction of UV-covered texels that have been painted.
    pub fn coverage(&self) -> f64 {
        let total = self.uv_coverage.count();
        if total == 0 {
            return 0.0;
        }
        let state = self.snapshot();
        let painted =
            self.uv_coverage.data().iter().enumerate().filter(|(t, &c)| c && state.is_painted(*t)).count();
        painted as f64 / total as f64
    }

    pub fn camera(&self, elevation: f64, azimuth: f64) -> OrbitCamera {
        OrbitCamera::new(elevation, azimuth)
            .with_lens(self.config.radius, self.config.fovy)
            .with_resolution(self.config.view_resolution)
    }

    fn begin(&self) -> Result<BusyGuard<'_>, ServiceError> {
        self.busy.compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire).map_err(|_| ServiceError::Busy)?;
        Ok(BusyGuard(&self.busy))
    }

    fn publish(&self, state: TextureState) {
        *self.state.write().expect("state lock") = Arc::new(state);
    }

    /// Renders the current state. Views that miss the object come back empty.
    pub fn render_gbuffer(&self, camera: &OrbitCamera) -> Result<Option<GBuffer>, ServiceError> {
        match render(&self.mesh, &self.snapshot(), camera) {
            Ok(g) => Ok(Some(g)),
            Err(RenderError::EmptyRender) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Display image for `mode` at `resolution` (3 channels; depth is 1).
    pub fn render_view(
        &self,
        elevation: f64,
        azimuth: f64,
        mode: RenderMode,
        resolution: usize,
    ) -> Result<Image, ServiceError> {
        let camera = self.camera(elevation, azimuth).with_resolution(resolution);
        let channels = if mode == RenderMode::Depth { 1 } else { 3 };
        Ok(match self.render_gbuffer(&camera)? {
            Some(g) if mode == RenderMode::Depth => g.depth,
            Some(g) => render_aux(&g, mode),
            None => Image::new(resolution, resolution, channels),
        })
    }

    /// Renders, classifies, inpaints and back-projects one view.
    pub fn inpaint_view(&self, elevation: f64, azimuth: f64, prompt: &str, seed: u64) -> Result<ViewReport, ServiceError> {
        let _guard = self.begin()?;
        self.inpaint_view_locked(elevation, azimuth, prompt, seed)
    }

    fn inpaint_view_locked(&self, elevation: f64, azimuth: f64, prompt: &str, seed: u64) -> Result<ViewReport, ServiceError> {
        let camera = self.camera(elevation, azimuth);
        let full_prompt = assemble_prompt(prompt, elevation, azimuth, &self.config);
        let mut report = ViewReport {
            elevation,
            azimuth,
            trimap: TrimapCounts::default(),
            prompt: full_prompt.clone(),
            backend_called: false,
            backend_id: None,
            backend_elapsed_ms: 0,
            update: UpdateReport::default(),
        };
        let base = self.snapshot();
        let g = match render(&self.mesh, &base, &camera) {
            Ok(g) => g,
            Err(RenderError::EmptyRender) => return Ok(report),
            Err(e) => return Err(e.into()),
        };
        let trimap = compute_trimap(&g, self.config.refine_margin);
        report.trimap = trimap.counts();
        if trimap.editable().is_empty() {
            return Ok(report);
        }

        let n = PROTOCOL_RESOLUTION;
        let request = InpaintRequest {
            image_masked: g.rgb.resize_bilinear(n, n),
            generate_mask: trimap.generate.resize_nearest(n, n),
            refine_mask: trimap.refine.resize_nearest(n, n),
            depth: g.depth.resize_bilinear(n, n),
            prompt: full_prompt,
            negative_prompt: self.config.negative_prompt.clone(),
            seed,
            steps: self.config.steps,
            refine_strength: self.config.refine_strength,
        };
        let response = self.backend.inpaint(&request)?;
        if (response.image.width(), response.image.height(), response.image.channels()) != (n, n, 3) {
            return Err(ServiceError::Backend(crate::backend::BackendError::Protocol(format!(
                "response image is {}",
                response.image.shape_string()
            ))));
        }
        report.backend_called = true;
        report.backend_id = Some(response.backend_id);
        report.backend_elapsed_ms = response.elapsed_ms;

        let inpainted = response.image.resize_bilinear(g.width, g.height);
        let blended = blend_keep(&inpainted, &g.rgb, &trimap.keep)?;
        let mut next = (*base).clone();
        let params = UpdateParams { mip_levels: self.config.mip_levels, refine_mode: self.config.refine_mode };
        report.update = next.update_texture(&g, &blended, &trimap, &params)?;
        self.publish(next);
        Ok(report)
    }

    /// Paints `views` in order with one prompt and seed, then dilates. Stops
    /// at the first failure; views already painted stay painted.
    pub fn run_views(&self, views: &[(f64, f64)], prompt: &str, seed: u64) -> Result<RunReport, ServiceError> {
        let _guard = self.begin()?;
        let mut reports = Vec::with_capacity(views.len());
        for &(e, a) in views {
            reports.push(self.inpaint_view_locked(e, a, prompt, seed)?);
        }
        let dilated_texels = if self.config.dilate_iterations > 0 {
            self.dilate_locked(self.config.dilate_iterations)?
        } else {
            0
        };
        Ok(RunReport { views: reports, dilated_texels, coverage: self.coverage() })
    }

    /// The automatic pipeline over the preset cameras.
    pub fn run_auto(&self, prompt: &str, seed: u64) -> Result<RunReport, ServiceError> {
        self.run_views(&preset_cameras(), prompt, seed)
    }

    /// Resets painted texels under `mask`, drawn over the view at the mask's
    /// resolution. Returns the number of texels cleared.
    pub fn erase(&self, elevation: f64, azimuth: f64, mask: &Mask) -> Result<usize, ServiceError> {
        let _guard = self.begin()?;
        if mask.width() != mask.height() {
            return Err(ServiceError::InvalidInput(format!("mask must be square, got {}x{}", mask.width(), mask.height())));
        }
        let camera = self.camera(elevation, azimuth).with_resolution(mask.width());
        let base = self.snapshot();
        let g = match render(&self.mesh, &base, &camera) {
            Ok(g) => g,
            Err(RenderError::EmptyRender) => return Ok(0),
            Err(e) => return Err(e.into()),
        };
        let mut next = (*base).clone();
        let cleared = next.erase_region(&g, mask)?;
        self.publish(next);
        Ok(cleared)
    }

    pub fn dilate(&self, iterations: usize) -> Result<usize, ServiceError> {
        let _guard = self.begin()?;
        self.dilate_locked(iterations)
    }

    fn dilate_locked(&self, iterations: usize) -> Result<usize, ServiceError> {
        let mut next = (*self.snapshot()).clone();
        let filled = next.dilate(iterations)?;
        self.publish(next);
        Ok(filled)
    }

    pub fn undo(&self) -> Result<UndoStatus, ServiceError> {
        let _guard = self.begin()?;
        let mut next = (*self.snapshot()).clone();
        let status = next.undo();
        self.publish(next);
        Ok(status)
    }

    /// Back to an unpainted atlas with no history.
    pub fn init(&self) -> Result<(), ServiceError> {
        let _guard = self.begin()?;
        let fresh = TextureState::new(self.config.texture_resolution)?.with_history_limit(self.config.history_limit);
        self.publish(fresh);
        Ok(())
    }

    /// Writes the textured mesh plus the texture-space buffers: `T.png`
    /// (same bytes as `albedo.png`), `W.png`, `V.png` and `meta.json`.
    pub fn save(&self, dir: &Path) -> Result<SavedSession, ServiceError> {
        let _guard = self.begin()?;
        let state = self.snapshot();
        let saved_mesh = save_textured_mesh(&self.mesh, state.texture(), dir)?;
        fs::copy(&saved_mesh.albedo, dir.join(TEXTURE_FILE))?;
        let weight_scale = state.weight().data().iter().copied().fold(0.0f32, f32::max).max(f32::MIN_POSITIVE);
        let words: Vec<f32> = state
            .weight()
            .data()
            .iter()
            .map(|&w| if w > 0.0 { (w / weight_scale).max(1.0 / 65535.0) } else { 0.0 })
            .collect();
        let res = state.resolution();
        let w_img = Image::from_vec(res, res, 1, words).expect("shape");
        fs::write(dir.join(WEIGHT_FILE), image_buf::encode_gray16(&w_img)?)?;
        fs::write(dir.join(VIEW_COS_FILE), image_buf::encode_gray16(state.view_cos())?)?;
        let meta = SessionMeta { config: self.config.clone(), weight_scale };
        fs::write(dir.join(META_FILE), serde_json::to_vec_pretty(&meta).expect("serializable"))?;
        Ok(SavedSession {
            dir: dir.to_path_buf(),
            files: [mesh::OBJ_FILE, mesh::MTL_FILE, mesh::ALBEDO_FILE, TEXTURE_FILE, WEIGHT_FILE, VIEW_COS_FILE, META_FILE]
                .map(String::from)
                .to_vec(),
        })
    }

    /// Restores a session written by [`Session::save`] under a new id. The
    /// stored mesh is used as-is.
    pub fn load(dir: &Path, backend: Arc<dyn InpaintBackend>) -> Result<Session, ServiceError> {
        let (mesh, texture) = mesh::load_textured_mesh(dir)?;
        let meta: SessionMeta = serde_json::from_slice(&fs::read(dir.join(META_FILE))?)
            .map_err(|e| ServiceError::InvalidInput(format!("{META_FILE}: {e}")))?;
        meta.config.validate()?;
        let mut weight = image_buf::decode_gray(&fs::read(dir.join(WEIGHT_FILE))?)?;
        for w in weight.data_mut() {
            *w *= meta.weight_scale;
        }
        let mut view_cos = image_buf::decode_gray(&fs::read(dir.join(VIEW_COS_FILE))?)?;
        // A cached cosine never outlives its weight.
        for (v, &w) in view_cos.data_mut().iter_mut().zip(weight.data()) {
            if w <= 0.0 {
                *v = 0.0;
            }
        }
        if texture.width() != meta.config.texture_resolution {
            return Err(ServiceError::InvalidInput(format!(
                "albedo is {}, config says {}",
                texture.shape_string(),
                meta.config.texture_resolution
            )));
        }
        let state = TextureState::from_parts(texture, weight, view_cos)?.with_history_limit(meta.config.history_limit);
        Ok(Self::assemble(mesh, meta.config, backend, state))
    }
}
