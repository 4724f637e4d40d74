use serde::{Deserialize, Serialize};

use crate::image_buf::{to_u8, Image, Mask};
use crate::raster::GBuffer;
use crate::texel::{bilinear_footprint, nearest_texel};

use super::gridput::grid_put;
use super::state::{TextureState, UNPAINTED_GRAY};
use super::trimap::Trimap;
use super::SynthesisError;

pub const DEFAULT_MIP_LEVELS: usize = 4;

/// Floor on a pixel's splat weight, so grazing pixels (view cosine 0) still
/// mark their texels as painted.
pub const MIN_SPLAT_WEIGHT: f32 = 1e-3;

/// How refined texels combine with what is already painted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RefineMode {
    /// Weighted average by accumulated weight.
    #[default]
    Blend,
    Overwrite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateParams {
    pub mip_levels: usize,
    pub refine_mode: RefineMode,
}

impl Default for UpdateParams {
    fn default() -> Self {
        Self { mip_levels: DEFAULT_MIP_LEVELS, refine_mode: RefineMode::Blend }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct UpdateReport {
    /// View pixels splatted into the atlas.
    pub samples: usize,
    /// Texels written, including extrapolated ones.
    pub texels_updated: usize,
    /// Subset of `texels_updated` reached only through coarser mip levels.
    pub texels_extrapolated: usize,
}

fn check_view_shape(g: &GBuffer, width: usize, height: usize, what: &str) -> Result<(), SynthesisError> {
    if g.width == width && g.height == height {
        Ok(())
    } else {
        Err(SynthesisError::ShapeMismatch(format!("{what} is {width}x{height}, view is {}x{}", g.width, g.height)))
    }
}

#[inline]
fn quantize(v: f32) -> f32 {
    to_u8(v) as f32 / 255.0
}

impl TextureState {
    /// Back-projects the generate and refine pixels of `blended` into the
    /// atlas.
    ///
    /// Samples are weighted by view cosine and splatted with [`grid_put`].
    /// Texels receiving full-resolution weight blend `T` by weight, add to `W`
    /// and raise `V` to the best cosine among the pixels touching them.
    /// Never-painted texels reached only through coarser levels take the
    /// extrapolated values. Texels that any keep pixel samples are left
    /// untouched.
    pub fn update_texture(
        &mut self,
        g: &GBuffer,
        blended: &Image,
        trimap: &Trimap,
        params: &UpdateParams,
    ) -> Result<UpdateReport, SynthesisError> {
        check_view_shape(g, blended.width(), blended.height(), "blended image")?;
        check_view_shape(g, trimap.generate.width(), trimap.generate.height(), "trimap")?;
        if blended.channels() != 3 {
            return Err(SynthesisError::ShapeMismatch(format!("blended image is {}", blended.shape_string())));
        }
        self.push_history();

        let res = self.resolution();
        let mut points = Vec::new();
        let mut values = Vec::new();
        let mut weights = Vec::new();
        for p in 0..g.pixel_count() {
            if !(trimap.generate.at(p) || trimap.refine.at(p)) {
                continue;
            }
            let cos = g.view_cos.data()[p];
            points.push(g.uv_at(p));
            values.extend_from_slice(blended.at(p));
            values.push(cos);
            weights.push(cos.max(MIN_SPLAT_WEIGHT));
        }
        let mut report = UpdateReport { samples: points.len(), ..Default::default() };
        if points.is_empty() {
            return Ok(report);
        }

        let splat = grid_put(&points, &values, 4, &weights, res, params.mip_levels)?;

        // Best cosine among samples with full-resolution footprint on each texel.
        let mut best_cos = vec![0.0f32; res * res];
        for (k, &uv) in points.iter().enumerate() {
            let cos = values[k * 4 + 3];
            for (t, bw) in bilinear_footprint(uv, res, res) {
                if bw > 0.0 {
                    best_cos[t] = best_cos[t].max(cos);
                }
            }
        }

        let mut protected = vec![false; res * res];
        for p in 0..g.pixel_count() {
            if trimap.keep.at(p) {
                let (x, y) = nearest_texel(g.uv_at(p), res, res);
                protected[y * res + x] = true;
            }
        }

        for t in 0..res * res {
            if protected[t] {
                continue;
            }
            let direct = splat.weight.data()[t];
            let old_w = self.weight.data()[t];
            let (w_new, cos_new, extrapolated) = if direct > 0.0 {
                (direct, best_cos[t], false)
            } else if splat.is_filled(t) && old_w == 0.0 {
                (splat.fill_weight.data()[t], splat.image.at(t)[3].clamp(0.0, 1.0), true)
            } else {
                continue;
            };
            let src = splat.image.at(t);
            let color = [src[0], src[1], src[2]];
            let dst = self.texture.at_mut(t);
            let overwrite = params.refine_mode == RefineMode::Overwrite || old_w == 0.0;
            for c in 0..3 {
                let mixed = if overwrite {
                    color[c]
                } else {
                    (old_w * dst[c] + w_new * color[c]) / (old_w + w_new)
                };
                dst[c] = quantize(mixed.clamp(0.0, 1.0));
            }
            self.weight.data_mut()[t] = old_w + w_new;
            let v = &mut self.view_cos.data_mut()[t];
            *v = v.max(cos_new);
            report.texels_updated += 1;
            if extrapolated {
                report.texels_extrapolated += 1;
            }
        }
        Ok(report)
    }

    /// Clears every texel touched by the full-resolution footprint of the
    /// masked object pixels back to unpainted. Returns the number of texels
    /// cleared.
    pub fn erase_region(&mut self, g: &GBuffer, mask: &Mask) -> Result<usize, SynthesisError> {
        check_view_shape(g, mask.width(), mask.height(), "erase mask")?;
        self.push_history();
        let res = self.resolution();
        let mut hit = vec![false; res * res];
        for p in 0..g.pixel_count() {
            if mask.at(p) && g.object_mask.at(p) {
                for (t, bw) in bilinear_footprint(g.uv_at(p), res, res) {
                    if bw > 0.0 {
                        hit[t] = true;
                    }
                }
            }
        }
        let gray = quantize(UNPAINTED_GRAY);
        let mut cleared = 0;
        for (t, _) in hit.iter().enumerate().filter(|(_, &h)| h) {
            self.texture.at_mut(t).fill(gray);
            self.weight.data_mut()[t] = 0.0;
            self.view_cos.data_mut()[t] = 0.0;
            cleared += 1;
        }
        Ok(cleared)
    }

    /// Grows painted regions into unpainted neighbors (8-connected), one ring
    /// per iteration. New texels take the mean color of their painted
    /// neighbors and the smallest positive weight in the atlas. Returns the
    /// number of texels filled.
    pub fn dilate(&mut self, iterations: usize) -> Result<usize, SynthesisError> {
        if iterations == 0 {
            return Err(SynthesisError::InvalidIterations);
        }
        self.push_history();
        let res = self.resolution();
        let mut filled = 0;
        for _ in 0..iterations {
            let min_w = self.weight.data().iter().copied().filter(|&w| w > 0.0).fold(f32::INFINITY, f32::min);
            if !min_w.is_finite() {
                break;
            }
            let painted: Vec<bool> = self.weight.data().iter().map(|&w| w > 0.0).collect();
            let mut grown = Vec::new();
            for y in 0..res {
                for x in 0..res {
                    if painted[y * res + x] {
                        continue;
                    }
                    let mut sum = [0.0f32; 3];
                    let mut n = 0;
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                            if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= res as i64 || ny >= res as i64 {
                                continue;
                            }
                            let nt = ny as usize * res + nx as usize;
                            if painted[nt] {
                                let c = self.texture.at(nt);
                                sum = [sum[0] + c[0], sum[1] + c[1], sum[2] + c[2]];
                                n += 1;
                            }
                        }
                    }
                    if n > 0 {
                        grown.push((y * res + x, sum.map(|s| quantize(s / n as f32))));
                    }
                }
            }
            if grown.is_empty() {
                break;
            }
            for (t, color) in &grown {
                self.texture.at_mut(*t).copy_from_slice(color);
                self.weight.data_mut()[*t] = min_w;
            }
            filled += grown.len();
        }
        Ok(filled)
    }
}
