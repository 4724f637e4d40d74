use std::collections::VecDeque;
use std::sync::Arc;

use crate::image_buf::Image;

use super::SynthesisError;

pub const MIN_TEXTURE_RESOLUTION: usize = 64;
pub const MAX_TEXTURE_RESOLUTION: usize = 4096;
pub const DEFAULT_TEXTURE_RESOLUTION: usize = 1024;
pub const DEFAULT_HISTORY_LIMIT: usize = 16;

/// Display value of never-painted texels.
pub const UNPAINTED_GRAY: f32 = 0.5;

pub fn check_texture_resolution(resolution: usize) -> Result<(), SynthesisError> {
    if resolution.is_power_of_two() && (MIN_TEXTURE_RESOLUTION..=MAX_TEXTURE_RESOLUTION).contains(&resolution) {
        Ok(())
    } else {
        Err(SynthesisError::InvalidResolution(resolution))
    }
}

/// Saved copy of the three texture-space buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub texture: Image,
    pub weight: Image,
    pub view_cos: Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UndoStatus {
    Restored,
    NothingToUndo,
}

/// The evolving paint state: albedo `texture` (3 channels), accumulated
/// back-projection `weight` (0 = never painted) and `view_cos`, the best view
/// cosine each texel has been painted from.
///
/// Texture values always sit on the 8-bit grid so saving and reloading an
/// atlas is lossless.
#[derive(Debug, Clone)]
pub struct TextureState {
    pub(crate) texture: Image,
    pub(crate) weight: Image,
    pub(crate) view_cos: Image,
    history: VecDeque<Arc<Snapshot>>,
    history_limit: usize,
}

impl TextureState {
    pub fn new(resolution: usize) -> Result<Self, SynthesisError> {
        check_texture_resolution(resolution)?;
        let mut texture = Image::filled(resolution, resolution, 3, UNPAINTED_GRAY);
        texture.quantize_u8();
        Ok(Self {
            texture,
            weight: Image::new(resolution, resolution, 1),
            view_cos: Image::new(resolution, resolution, 1),
            history: VecDeque::new(),
            history_limit: DEFAULT_HISTORY_LIMIT,
        })
    }

    /// Rebuilds a state from stored buffers; history starts empty.
    pub fn from_parts(mut texture: Image, weight: Image, view_cos: Image) -> Result<Self, SynthesisError> {
        let res = texture.width();
        check_texture_resolution(res)?;
        let shapes_ok = texture.height() == res
            && texture.channels() == 3
            && weight.width() == res
            && weight.height() == res
            && weight.channels() == 1
            && view_cos.width() == res
            && view_cos.height() == res
            && view_cos.channels() == 1;
        if !shapes_ok {
            return Err(SynthesisError::ShapeMismatch(format!(
                "texture {}, weight {}, view_cos {}",
                texture.shape_string(),
                weight.shape_string(),
                view_cos.shape_string()
            )));
        }
        texture.quantize_u8();
        let state = Self {
            texture,
            weight,
            view_cos,
            history: VecDeque::new(),
            history_limit: DEFAULT_HISTORY_LIMIT,
        };
        state.check_invariants().map_err(SynthesisError::InvalidState)?;
        Ok(state)
    }

    pub fn with_history_limit(mut self, limit: usize) -> Self {
        self.history_limit = limit;
        while self.history.len() > limit {
            self.history.pop_front();
        }
        self
    }

    pub fn resolution(&self) -> usize {
        self.texture.width()
    }

    pub fn texture(&self) -> &Image {
        &self.texture
    }

    pub fn weight(&self) -> &Image {
        &self.weight
    }

    pub fn view_cos(&self) -> &Image {
        &self.view_cos
    }

    pub fn history_depth(&self) -> usize {
        self.history.len()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { texture: self.texture.clone(), weight: self.weight.clone(), view_cos: self.view_cos.clone() }
    }

    /// Bitwise equality of the buffers, ignoring history.
    pub fn same_buffers(&self, other: &TextureState) -> bool {
        self.texture == other.texture && self.weight == other.weight && self.view_cos == other.view_cos
    }

    pub(crate) fn push_history(&mut self) {
        if self.history_limit == 0 {
            return;
        }
        if self.history.len() == self.history_limit {
            self.history.pop_front();
        }
        self.history.push_back(Arc::new(self.snapshot()));
    }

    /// Restores the most recent snapshot.
    pub fn undo(&mut self) -> UndoStatus {
        match self.history.pop_back() {
            Some(snap) => {
                let snap = Arc::try_unwrap(snap).unwrap_or_else(|shared| (*shared).clone());
                self.texture = snap.texture;
                self.weight = snap.weight;
                self.view_cos = snap.view_cos;
                UndoStatus::Restored
            }
            None => UndoStatus::NothingToUndo,
        }
    }

    pub fn is_painted(&self, texel: usize) -> bool {
        self.weight.data()[texel] > 0.0
    }

    pub fn painted_count(&self) -> usize {
        self.weight.data().iter().filter(|&&w| w > 0.0).count()
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, (&w, &v)) in self.weight.data().iter().zip(self.view_cos.data()).enumerate() {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(format!("texel {i}: weight {w} is negative or non-finite"));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("texel {i}: view cosine {v} outside [0,1]"));
            }
            if v > 0.0 && w <= 0.0 {
                return Err(format!("texel {i}: cached cosine {v} on an unpainted texel"));
            }
        }
        if let Some(v) = self.texture.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(format!("texture value {v} outside [0,1]"));
        }
        Ok(())
    }
}
