//! Per-view texture synthesis state machine: trimap classification, keep
//! blending, back-projection with mipmap extrapolation, erase, dilation and
//! undo.

mod blend;
mod gridput;
mod state;
mod trimap;
mod update;

use thiserror::Error;

pub use blend::blend_keep;
pub use gridput::{grid_put, nearest_put, GridPut};
pub use state::{
    check_texture_resolution, Snapshot, TextureState, UndoStatus, DEFAULT_HISTORY_LIMIT,
    DEFAULT_TEXTURE_RESOLUTION, MAX_TEXTURE_RESOLUTION, MIN_TEXTURE_RESOLUTION, UNPAINTED_GRAY,
};
pub use trimap::{compute_trimap, Trimap, TrimapCounts, DEFAULT_REFINE_MARGIN};
pub use update::{RefineMode, UpdateParams, UpdateReport, DEFAULT_MIP_LEVELS, MIN_SPLAT_WEIGHT};

#[derive(Debug, Error, PartialEq)]
pub enum SynthesisError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: {points} points, {values} values, {weights} weights")]
    LengthMismatch { points: usize, values: usize, weights: usize },
    #[error("resolution {0} must be a power of two within the supported range")]
    InvalidResolution(usize),
    #[error("mip levels {levels} outside 1..={max}")]
    InvalidLevels { levels: usize, max: usize },
    #[error("sample weight {0} must be positive and finite")]
    InvalidWeight(f32),
    #[error("iteration count must be at least 1")]
    InvalidIterations,
    #[error("inconsistent state: {0}")]
    InvalidState(String),
}
