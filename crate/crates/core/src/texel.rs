//! UV to texel addressing shared by sampling and splatting.
//!
//! UV (0, 0) is the bottom-left corner of the atlas and row 0 is the top row,
//! so `v` is flipped when converting. Continuous texel coordinates put texel
//! centers on integers.

use glam::DVec2;

/// Continuous texel coordinate of `uv` in a `width` x `height` grid.
#[inline]
pub fn uv_to_texel(uv: DVec2, width: usize, height: usize) -> (f64, f64) {
    (uv.x * width as f64 - 0.5, (1.0 - uv.y) * height as f64 - 0.5)
}

/// The texel whose cell contains `uv`.
#[inline]
pub fn nearest_texel(uv: DVec2, width: usize, height: usize) -> (usize, usize) {
    let x = (uv.x * width as f64).floor().clamp(0.0, (width - 1) as f64) as usize;
    let y = ((1.0 - uv.y) * height as f64).floor().clamp(0.0, (height - 1) as f64) as usize;
    (x, y)
}

#[inline]
pub fn texel_center_uv(x: usize, y: usize, width: usize, height: usize) -> DVec2 {
    DVec2::new((x as f64 + 0.5) / width as f64, 1.0 - (y as f64 + 0.5) / height as f64)
}

/// The four texels bracketing `uv` with their bilinear weights, as flat
/// indices. Out-of-range neighbors are clamped onto the border so the weights
/// always sum to one.
#[inline]
pub fn bilinear_footprint(uv: DVec2, width: usize, height: usize) -> [(usize, f64); 4] {
    let (x, y) = uv_to_texel(uv, width, height);
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let clamp_x = |v: f64| v.clamp(0.0, (width - 1) as f64) as usize;
    let clamp_y = |v: f64| v.clamp(0.0, (height - 1) as f64) as usize;
    let (xa, xb) = (clamp_x(x0), clamp_x(x0 + 1.0));
    let (ya, yb) = (clamp_y(y0), clamp_y(y0 + 1.0));
    [
        (ya * width + xa, (1.0 - fx) * (1.0 - fy)),
        (ya * width + xb, fx * (1.0 - fy)),
        (yb * width + xa, (1.0 - fx) * fy),
        (yb * width + xb, fx * fy),
    ]
}
