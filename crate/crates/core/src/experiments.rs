//! Sparse-sample reconstruction: how much of an image comes back from a small
//! random subset of its pixels, with the mipmap splat versus a naive
//! single-level nearest-texel splat.

use glam::DVec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::image_buf::Image;
use crate::synthesis::{grid_put, nearest_put, SynthesisError};
use crate::texel::uv_to_texel;

/// A deterministic photo-like RGB test image: a sky-to-ground gradient,
/// hard-edged shapes and a band of fine texture.
pub fn synthetic_photo(size: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let discs: Vec<([f32; 2], f32, [f32; 3])> = (0..12)
        .map(|_| {
            let c = [rng.random::<f32>(), rng.random::<f32>()];
            (c, rng.random_range(0.03..0.15), [rng.random(), rng.random(), rng.random()])
        })
        .collect();
    let boxes: Vec<([f32; 4], [f32; 3])> = (0..6)
        .map(|_| {
            let (x, y) = (rng.random::<f32>(), rng.random::<f32>());
            let (w, h) = (rng.random_range(0.05..0.3), rng.random_range(0.05..0.3));
            ([x, y, x + w, y + h], [rng.random(), rng.random(), rng.random()])
        })
        .collect();
    let mut img = Image::new(size, size, 3);
    for y in 0..size {
        for x in 0..size {
            let (u, v) = ((x as f32 + 0.5) / size as f32, (y as f32 + 0.5) / size as f32);
            let mut c = if v < 0.55 {
                [0.35 + 0.4 * v, 0.55 + 0.3 * v, 0.95 - 0.2 * v]
            } else {
                let grain = 0.08 * ((u * 90.0).sin() * (v * 70.0).cos());
                [0.35 + grain, 0.45 + 0.3 * (v - 0.55) + grain, 0.2 + grain]
            };
            for (b, col) in &boxes {
                if u >= b[0] && u < b[2] && v >= b[1] && v < b[3] {
                    c = *col;
                }
            }
            for (center, r, col) in &discs {
                let d = ((u - center[0]).powi(2) + (v - center[1]).powi(2)).sqrt();
                if d < *r {
                    let shade = 1.0 - 0.5 * d / r;
                    c = [col[0] * shade, col[1] * shade, col[2] * shade];
                }
            }
            img.pixel_mut(x, y).copy_from_slice(&c.map(|v| v.clamp(0.0, 1.0)));
        }
    }
    img.quantize_u8();
    img
}

/// Peak signal-to-noise ratio in dB over texels where `region` holds, for
/// values in [0, 1]. Infinite when the region matches exactly.
pub fn psnr(a: &Image, b: &Image, region: impl Fn(usize) -> bool) -> f64 {
    assert!(a.same_shape(b));
    let ch = a.channels();
    let (mut se, mut n) = (0.0f64, 0usize);
    for p in (0..a.pixel_count()).filter(|&p| region(p)) {
        for c in 0..ch {
            let d = (a.at(p)[c] - b.at(p)[c]) as f64;
            se += d * d;
        }
        n += ch;
    }
    if n == 0 {
        return f64::NAN;
    }
    let mse = se / n as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

/// Random continuous sample positions and the image's bilinear values there.
pub fn sample_image(image: &Image, count: usize, seed: u64) -> (Vec<DVec2>, Vec<f32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch = image.channels();
    let mut points = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count * ch);
    for _ in 0..count {
        let uv = DVec2::new(rng.random::<f64>(), rng.random::<f64>());
        let (fx, fy) = uv_to_texel(uv, image.width(), image.height());
        points.push(uv);
        values.extend((0..ch).map(|c| image.sample_bilinear_texel(fx, fy, c)));
    }
    (points, values)
}

#[derive(Debug, Clone, Serialize)]
pub struct SparseReconstruction {
    pub size: usize,
    pub samples: usize,
    pub levels: usize,
    pub naive_hole_fraction: f64,
    pub mipmap_hole_fraction: f64,
    /// PSNR over the texels the mipmap result filled. Naive holes keep the
    /// empty image's zero there.
    pub naive_psnr_filled: f64,
    pub mipmap_psnr_filled: f64,
    /// PSNR over texels both methods filled.
    pub naive_psnr_common: f64,
    pub mipmap_psnr_common: f64,
    #[serde(skip)]
    pub naive: Image,
    #[serde(skip)]
    pub mipmap: Image,
}

/// Reconstructs a square power-of-two `image` from `keep_fraction` of its
/// pixel count in random samples, both ways.
pub fn sparse_reconstruction(
    image: &Image,
    keep_fraction: f64,
    levels: usize,
    seed: u64,
) -> Result<SparseReconstruction, SynthesisError> {
    let size = image.width();
    if image.height() != size || !size.is_power_of_two() {
        return Err(SynthesisError::InvalidResolution(size));
    }
    let total = size * size;
    let count = (keep_fraction.clamp(0.0, 1.0) * total as f64).round() as usize;
    let (points, values) = sample_image(image, count, seed);
    let ch = image.channels();
    let weights = vec![1.0f32; points.len()];

    let mip = grid_put(&points, &values, ch, &weights, size, levels)?;
    let (naive, naive_weight) = nearest_put(&points, &values, ch, size);
    let naive_filled = |t: usize| naive_weight.data()[t] > 0.0;

    let naive_holes = (0..total).filter(|&t| !naive_filled(t)).count();
    Ok(SparseReconstruction {
        size,
        samples: points.len(),
        levels,
        naive_hole_fraction: naive_holes as f64 / total as f64,
        mipmap_hole_fraction: mip.hole_count() as f64 / total as f64,
        naive_psnr_common: psnr(&naive, image, |t| naive_filled(t) && mip.is_filled(t)),
        mipmap_psnr_common: psnr(&mip.image, image, |t| naive_filled(t) && mip.is_filled(t)),
        naive_psnr_filled: psnr(&naive, image, |t| mip.is_filled(t)),
        mipmap_psnr_filled: psnr(&mip.image, image, |t| mip.is_filled(t)),
        naive,
        mipmap: mip.image,
    })
}
