use serde::{Deserialize, Serialize};

use crate::backend::{DEFAULT_REFINE_STRENGTH, DEFAULT_STEPS};
use crate::camera::{DEFAULT_FOVY, DEFAULT_RADIUS, DEFAULT_RESOLUTION};
use crate::synthesis::{
    check_texture_resolution, RefineMode, DEFAULT_HISTORY_LIMIT, DEFAULT_MIP_LEVELS, DEFAULT_REFINE_MARGIN,
    DEFAULT_TEXTURE_RESOLUTION,
};

use super::ServiceError;

pub const DEFAULT_POSITIVE_SUFFIX: &str = "masterpiece, high quality";
pub const DEFAULT_NEGATIVE_PROMPT: &str = "bad quality, worst quality, shadows";
pub const DEFAULT_DILATE_ITERATIONS: usize = 4;

/// Per-session synthesis settings. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub radius: f64,
    pub fovy: f64,
    pub view_resolution: usize,
    pub texture_resolution: usize,
    pub steps: u32,
    pub refine_strength: f64,
    pub positive_suffix: String,
    pub negative_prompt: String,
    pub directional_prompts: bool,
    pub refine_margin: f32,
    pub mip_levels: usize,
    /// Rings grown after an automatic run; 0 disables the pass.
    pub dilate_iterations: usize,
    pub refine_mode: RefineMode,
    pub history_limit: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            radius: DEFAULT_RADIUS,
            fovy: DEFAULT_FOVY,
            view_resolution: DEFAULT_RESOLUTION,
            texture_resolution: DEFAULT_TEXTURE_RESOLUTION,
            steps: DEFAULT_STEPS,
            refine_strength: DEFAULT_REFINE_STRENGTH,
            positive_suffix: DEFAULT_POSITIVE_SUFFIX.into(),
            negative_prompt: DEFAULT_NEGATIVE_PROMPT.into(),
            directional_prompts: true,
            refine_margin: DEFAULT_REFINE_MARGIN,
            mip_levels: DEFAULT_MIP_LEVELS,
            dilate_iterations: DEFAULT_DILATE_ITERATIONS,
            refine_mode: RefineMode::Blend,
            history_limit: DEFAULT_HISTORY_LIMIT,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), ServiceError> {
        let bad = |m: String| Err(ServiceError::InvalidInput(m));
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius {} must be positive", self.radius));
        }
        if !(1.0..=120.0).contains(&self.fovy) {
            return bad(format!("fovy {} outside [1, 120]", self.fovy));
        }
        if self.view_resolution < 64 || self.view_resolution > 4096 || !self.view_resolution.is_multiple_of(8) {
            return bad(format!("view_resolution {} must be a multiple of 8 in [64, 4096]", self.view_resolution));
        }
        check_texture_resolution(self.texture_resolution).map_err(|e| ServiceError::InvalidInput(e.to_string()))?;
        let max_levels = self.texture_resolution.trailing_zeros() as usize - 1;
        if self.mip_levels < 1 || self.mip_levels > max_levels {
            return bad(format!("mip_levels {} outside [1, {max_levels}]", self.mip_levels));
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.refine_strength) {
            return bad(format!("refine_strength {} outside [0, 1]", self.refine_strength));
        }
        if !(self.refine_margin >= 0.0 && self.refine_margin.is_finite()) {
            return bad(format!("refine_margin {} must be non-negative", self.refine_margin));
        }
        Ok(())
    }
}

/// The ten automatic viewpoints as (elevation, azimuth) in degrees, in the
/// order they are painted.
pub fn preset_cameras() -> [(f64, f64); 10] {
    [
        (0.0, 0.0),
        (0.0, 45.0),
        (0.0, -45.0),
        (0.0, 90.0),
        (0.0, -90.0),
        (0.0, 135.0),
        (0.0, -135.0),
        (0.0, 180.0),
        (90.0, 0.0),
        (-90.0, 0.0),
    ]
}

/// View label appended to prompts.
pub fn directional_prompt(elevation: f64, azimuth: f64) -> &'static str {
    let azimuth = crate::camera::wrap_azimuth(azimuth).abs();
    if elevation >= 60.0 {
        "overhead view"
    } else if elevation <= -60.0 {
        "bottom view"
    } else if azimuth <= 45.0 {
        "front view"
    } else if azimuth >= 135.0 {
        "back view"
    } else {
        "side view"
    }
}

/// User prompt, then the view label (if enabled), then the positive suffix,
/// joined with commas. Empty parts are dropped.
pub fn assemble_prompt(prompt: &str, elevation: f64, azimuth: f64, config: &SynthesisConfig) -> String {
    let direction = if config.directional_prompts { directional_prompt(elevation, azimuth) } else { "" };
    [prompt.trim(), direction, config.positive_suffix.trim()]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Parses `"e,a;e,a;..."` into (elevation, azimuth) pairs.
pub fn parse_views(text: &str) -> Result<Vec<(f64, f64)>, ServiceError> {
    let mut views = Vec::new();
    for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(',').map(str::trim).collect();
        let parsed = match parts.as_slice() {
            [e, a] => e.parse::<f64>().ok().zip(a.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((e, a)) if e.is_finite() && a.is_finite() => views.push((e, a)),
            _ => return Err(ServiceError::InvalidInput(format!("bad view `{item}`, expected `elevation,azimuth`"))),
        }
    }
    if views.is_empty() {
        return Err(ServiceError::InvalidInput("no views given".into()));
    }
    Ok(views)
}
