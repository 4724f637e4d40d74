//! Mipmap bilinear extrapolation: scattered samples are splatted into a
//! texture with inverse bilinear weights at several pyramid levels, and holes
//! at fine levels are filled from coarser ones (pull-push).

use glam::DVec2;

use crate::image_buf::Image;
use crate::texel::bilinear_footprint;

use super::SynthesisError;

/// Result of [`grid_put`].
#[derive(Debug, Clone)]
pub struct GridPut {
    /// Reconstructed values; zero where nothing reached the texel.
    pub image: Image,
    /// Accumulated bilinear weight at full resolution (level 0 only).
    pub weight: Image,
    /// Weight of whichever level supplied each texel, expressed per
    /// full-resolution texel. Positive exactly where `image` is defined.
    pub fill_weight: Image,
}

impl GridPut {
    pub fn is_filled(&self, texel: usize) -> bool {
        self.fill_weight.data()[texel] > 0.0
    }

    pub fn hole_count(&self) -> usize {
        self.fill_weight.data().iter().filter(|&&w| w <= 0.0).count()
    }
}

/// Weighted accumulation at one pyramid level.
struct Level {
    size: usize,
    color: Vec<f64>,
    weight: Vec<f64>,
}

impl Level {
    fn splat(size: usize, channels: usize, points: &[DVec2], values: &[f32], weights: &[f32]) -> Level {
        let mut color = vec![0.0f64; size * size * channels];
        let mut weight = vec![0.0f64; size * size];
        for (k, (&uv, &w)) in points.iter().zip(weights).enumerate() {
            let sample = &values[k * channels..(k + 1) * channels];
            for (texel, bw) in bilinear_footprint(uv, size, size) {
                let ww = bw * w as f64;
                if ww <= 0.0 {
                    continue;
                }
                weight[texel] += ww;
                let dst = &mut color[texel * channels..(texel + 1) * channels];
                for (d, &s) in dst.iter_mut().zip(sample) {
                    *d += ww * s as f64;
                }
            }
        }
        Level { size, color, weight }
    }
}

/// Splats `values` (`channels` per point) at `points` into a
/// `size` x `size` grid, using `levels` additional half-resolution levels to
/// fill holes.
///
/// Every texel whose cell at the coarsest level (`2^levels` texels wide)
/// received a sample ends up filled.
pub fn grid_put(
    points: &[DVec2],
    values: &[f32],
    channels: usize,
    weights: &[f32],
    size: usize,
    levels: usize,
) -> Result<GridPut, SynthesisError> {
    if channels == 0 || values.len() != points.len() * channels || weights.len() != points.len() {
        return Err(SynthesisError::LengthMismatch {
            points: points.len(),
            values: values.len(),
            weights: weights.len(),
        });
    }
    if !size.is_power_of_two() || size < 4 {
        return Err(SynthesisError::InvalidResolution(size));
    }
    let max_levels = size.trailing_zeros() as usize - 1;
    if levels < 1 || levels > max_levels {
        return Err(SynthesisError::InvalidLevels { levels, max: max_levels });
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(SynthesisError::InvalidWeight(*w));
    }

    let pyramid: Vec<Level> =
        (0..=levels).map(|l| Level::splat(size >> l, channels, points, values, weights)).collect();

    // Resolve the coarsest level, then walk toward level 0 filling holes with
    // the bilinearly upsampled coarser result.
    let coarsest = &pyramid[levels];
    let mut color = vec![0.0f64; coarsest.size * coarsest.size * channels];
    let mut fill = vec![0.0f64; coarsest.size * coarsest.size];
    resolve_level(coarsest, channels, None, &mut color, &mut fill);

    for level in pyramid[..levels].iter().rev() {
        let up = upsample(&color, &fill, level.size / 2, channels);
        let mut next_color = vec![0.0f64; level.size * level.size * channels];
        let mut next_fill = vec![0.0f64; level.size * level.size];
        resolve_level(level, channels, Some(&up), &mut next_color, &mut next_fill);
        color = next_color;
        fill = next_fill;
    }

    let level0 = &pyramid[0];
    let image = Image::from_vec(size, size, channels, color.iter().map(|&v| v as f32).collect()).expect("shape");
    let weight = Image::from_vec(size, size, 1, level0.weight.iter().map(|&v| v as f32).collect()).expect("shape");
    let fill_weight = Image::from_vec(size, size, 1, fill.iter().map(|&v| v as f32).collect()).expect("shape");
    Ok(GridPut { image, weight, fill_weight })
}

/// Upsampled coarser level: premultiplied color, coverage and fill weight.
struct Upsampled {
    color: Vec<f64>,
    coverage: Vec<f64>,
    fill: Vec<f64>,
}

fn resolve_level(level: &Level, channels: usize, up: Option<&Upsampled>, color: &mut [f64], fill: &mut [f64]) {
    for t in 0..level.size * level.size {
        let w = level.weight[t];
        let dst = &mut color[t * channels..(t + 1) * channels];
        if w > 0.0 {
            for (d, &c) in dst.iter_mut().zip(&level.color[t * channels..(t + 1) * channels]) {
                *d = c / w;
            }
            fill[t] = w;
        } else if let Some(up) = up {
            let cov = up.coverage[t];
            if cov > 0.0 && up.fill[t] > 0.0 {
                for (d, &c) in dst.iter_mut().zip(&up.color[t * channels..(t + 1) * channels]) {
                    *d = c / cov;
                }
                fill[t] = up.fill[t];
            }
        }
    }
}

/// Doubles the resolution of a partially defined level with bilinear
/// interpolation restricted to defined texels. Fill weights are spread over
/// the four finer texels each coarse texel covers.
fn upsample(color: &[f64], fill: &[f64], size: usize, channels: usize) -> Upsampled {
    let fine = size * 2;
    let mut out = Upsampled {
        color: vec![0.0; fine * fine * channels],
        coverage: vec![0.0; fine * fine],
        fill: vec![0.0; fine * fine],
    };
    let max = (size - 1) as f64;
    for y in 0..fine {
        let cy = ((y as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, max);
        let y0 = cy.floor() as usize;
        let y1 = (y0 + 1).min(size - 1);
        let ty = cy - y0 as f64;
        for x in 0..fine {
            let cx = ((x as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, max);
            let x0 = cx.floor() as usize;
            let x1 = (x0 + 1).min(size - 1);
            let tx = cx - x0 as f64;
            let t = y * fine + x;
            for (src, bw) in [
                (y0 * size + x0, (1.0 - tx) * (1.0 - ty)),
                (y0 * size + x1, tx * (1.0 - ty)),
                (y1 * size + x0, (1.0 - tx) * ty),
                (y1 * size + x1, tx * ty),
            ] {
                if bw <= 0.0 || fill[src] <= 0.0 {
                    continue;
                }
                out.coverage[t] += bw;
                out.fill[t] += bw * fill[src] / 4.0;
                for c in 0..channels {
                    out.color[t * channels + c] += bw * color[src * channels + c];
                }
            }
        }
    }
    out
}

/// Single-level nearest-texel splat, the naive baseline for comparisons.
/// Returns the averaged image and per-texel hit weight.
pub fn nearest_put(points: &[DVec2], values: &[f32], channels: usize, size: usize) -> (Image, Image) {
    let mut acc = vec![0.0f64; size * size * channels];
    let mut cnt = vec![0.0f64; size * size];
    for (k, &uv) in points.iter().enumerate() {
        let (x, y) = crate::texel::nearest_texel(uv, size, size);
        let t = y * size + x;
        cnt[t] += 1.0;
        for c in 0..channels {
            acc[t * channels + c] += values[k * channels + c] as f64;
        }
    }
    let mut image = Image::new(size, size, channels);
    for t in 0..size * size {
        if cnt[t] > 0.0 {
            for c in 0..channels {
                image.data_mut()[t * channels + c] = (acc[t * channels + c] / cnt[t]) as f32;
            }
        }
    }
    let weight = Image::from_vec(size, size, 1, cnt.iter().map(|&v| v as f32).collect()).expect("shape");
    (image, weight)
}
