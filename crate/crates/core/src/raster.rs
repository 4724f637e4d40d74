//! Deterministic software rasterizer producing the per-view G-buffer.
//!
//! Triangles are clipped against the near plane, back faces culled, and
//! covered pixel centers resolved with a strict depth test (earlier faces win
//! ties) and a top-left fill rule. Attributes are interpolated
//! perspective-correctly. Work is split into horizontal bands processed in
//! parallel; each band visits its triangles in face order, so the output does
//! not depend on scheduling.

use std::fmt;
use std::str::FromStr;

use glam::{DVec2, DVec3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraError, CameraTransforms, OrbitCamera, NEAR_PLANE};
use crate::image_buf::{self, CodecError, Image, Mask};
use crate::mesh::Mesh;
use crate::synthesis::{TextureState, UNPAINTED_GRAY};
use crate::texel::{nearest_texel, uv_to_texel};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("nothing rendered: the object is outside the frame")]
    EmptyRender,
    #[error(transparent)]
    Camera(#[from] CameraError),
}

/// Per-pixel render outputs for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct GBuffer {
    pub width: usize,
    pub height: usize,
    /// Current texture sampled through UV; unpainted texels show 0.5 gray,
    /// background is black.
    pub rgb: Image,
    pub object_mask: Mask,
    /// Object pixels whose nearest texel has been painted.
    pub painted_mask: Mask,
    /// Per-view min-max normalized depth, nearest surface 1, farthest 0,
    /// background 0.
    pub depth: Image,
    /// Unit world-space normals (zero on background).
    pub normal: Image,
    pub uv: Image,
    pub view_cos: Image,
    pub w_sampled: Image,
    pub v_sampled: Image,
}

impl GBuffer {
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn uv_at(&self, p: usize) -> DVec2 {
        let uv = self.uv.at(p);
        DVec2::new(uv[0] as f64, uv[1] as f64)
    }

    pub fn rgb_png(&self) -> Result<Vec<u8>, CodecError> {
        image_buf::encode_rgb8(&self.rgb)
    }

    pub fn depth_png(&self) -> Result<Vec<u8>, CodecError> {
        image_buf::encode_gray16(&self.depth)
    }

    pub fn object_mask_png(&self) -> Result<Vec<u8>, CodecError> {
        image_buf::encode_mask(&self.object_mask)
    }

    pub fn painted_mask_png(&self) -> Result<Vec<u8>, CodecError> {
        image_buf::encode_mask(&self.painted_mask)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    pub cull_back_faces: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { cull_back_faces: true }
    }
}

/// A triangle after clipping, in screen space. `bary` holds the barycentric
/// coordinates of each clipped vertex with respect to the source face.
#[derive(Debug, Clone, Copy)]
struct ScreenTri {
    face: u32,
    screen: [DVec2; 3],
    /// Positive camera-space depth of each vertex.
    depth: [f64; 3],
    bary: [DVec3; 3],
}

#[derive(Debug, Clone, Copy)]
struct ClipVertex {
    cam: DVec3,
    bary: DVec3,
}

const BAND_HEIGHT: usize = 16;

/// Clips a camera-space triangle against `z <= -NEAR_PLANE`.
fn clip_near(tri: [ClipVertex; 3]) -> Vec<[ClipVertex; 3]> {
    let inside = |v: &ClipVertex| v.cam.z <= -NEAR_PLANE;
    if tri.iter().all(inside) {
        return vec![tri];
    }
    if !tri.iter().any(inside) {
        return Vec::new();
    }
    let mut poly: Vec<ClipVertex> = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        if inside(&a) {
            poly.push(a);
        }
        if inside(&a) != inside(&b) {
            let t = (-NEAR_PLANE - a.cam.z) / (b.cam.z - a.cam.z);
            poly.push(ClipVertex { cam: a.cam.lerp(b.cam, t), bary: a.bary.lerp(b.bary, t) });
        }
    }
    (1..poly.len() - 1).map(|k| [poly[0], poly[k], poly[k + 1]]).collect()
}

fn edge(a: DVec2, b: DVec2, p: DVec2) -> f64 {
    // Evaluated in a fixed endpoint order so edge(a, b, p) == -edge(b, a, p)
    // exactly and triangles sharing an edge leave no gaps.
    if (a.x, a.y) <= (b.x, b.y) {
        (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
    } else {
        -((a.x - b.x) * (p.y - b.y) - (a.y - b.y) * (p.x - b.x))
    }
}

/// Top-left fill rule for triangles with positive [`edge`] area in y-down
/// screen space: top edges run in +x, left edges run in -y.
fn is_top_left(a: DVec2, b: DVec2) -> bool {
    let d = b - a;
    (d.y == 0.0 && d.x > 0.0) || d.y < 0.0
}

fn setup_triangles(
    mesh: &Mesh,
    cam: &CameraTransforms,
    size: usize,
    options: &RenderOptions,
) -> Vec<ScreenTri> {
    let tan_half = (cam.fovy_radians * 0.5).tan();
    let cam_pos: Vec<DVec3> = mesh.vertices.iter().map(|v| cam.view.transform_point3(*v)).collect();
    let s = size as f64;
    let project = |p: DVec3| -> DVec2 {
        let d = -p.z;
        let ndc_x = p.x / (d * tan_half);
        let ndc_y = p.y / (d * tan_half);
        DVec2::new((ndc_x + 1.0) * 0.5 * s, (1.0 - ndc_y) * 0.5 * s)
    };

    let mut out = Vec::with_capacity(mesh.faces.len());
    for (fi, face) in mesh.faces.iter().enumerate() {
        let verts = [0, 1, 2].map(|k| ClipVertex {
            cam: cam_pos[face.corners[k].position as usize],
            bary: DVec3::from_array({
                let mut b = [0.0; 3];
                b[k] = 1.0;
                b
            }),
        });
        for tri in clip_near(verts) {
            let mut screen = tri.map(|v| project(v.cam));
            let mut depth = tri.map(|v| -v.cam.z);
            let mut bary = tri.map(|v| v.bary);
            let area = edge(screen[0], screen[1], screen[2]);
            if area == 0.0 || !area.is_finite() {
                continue;
            }
            // Counter-clockwise faces seen from the front have negative area in
            // y-down screen space; flip those so every kept triangle is positive.
            if area > 0.0 {
                if options.cull_back_faces {
                    continue;
                }
            } else {
                screen.swap(1, 2);
                depth.swap(1, 2);
                bary.swap(1, 2);
            }
            out.push(ScreenTri { face: fi as u32, screen, depth, bary });
        }
    }
    out
}

/// Per-pixel visibility result.
#[derive(Debug, Clone, Copy)]
struct Fragment {
    depth: f64,
    face: u32,
    bary: DVec3,
}

fn rasterize(tris: &[ScreenTri], size: usize) -> Vec<Option<Fragment>> {
    let bands = size.div_ceil(BAND_HEIGHT);
    let mut binned: Vec<Vec<u32>> = vec![Vec::new(); bands];
    for (i, t) in tris.iter().enumerate() {
        let ymin = t.screen.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let ymax = t.screen.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        if ymax < 0.0 || ymin > size as f64 {
            continue;
        }
        let b0 = ((ymin.max(0.0) as usize) / BAND_HEIGHT).min(bands - 1);
        let b1 = ((ymax.min(size as f64 - 1.0).max(0.0) as usize) / BAND_HEIGHT).min(bands - 1);
        for b in &mut binned[b0..=b1] {
            b.push(i as u32);
        }
    }

    let mut frags: Vec<Option<Fragment>> = vec![None; size * size];
    frags.par_chunks_mut(BAND_HEIGHT * size).enumerate().for_each(|(band, rows)| {
        let y_start = band * BAND_HEIGHT;
        let y_end = (y_start + BAND_HEIGHT).min(size);
        for &ti in &binned[band] {
            raster_triangle(&tris[ti as usize], size, y_start, y_end, rows);
        }
    });
    frags
}

fn raster_triangle(t: &ScreenTri, size: usize, y_start: usize, y_end: usize, rows: &mut [Option<Fragment>]) {
    let [a, b, c] = t.screen;
    let area = edge(a, b, c);
    let xmin = a.x.min(b.x).min(c.x).floor().max(0.0) as usize;
    let xmax = (a.x.max(b.x).max(c.x).ceil() as isize).clamp(0, size as isize - 1) as usize;
    let ymin = (a.y.min(b.y).min(c.y).floor().max(y_start as f64)) as usize;
    let ymax = (a.y.max(b.y).max(c.y).ceil() as isize).clamp(0, y_end as isize - 1) as usize;
    if ymin > ymax || xmin > xmax {
        return;
    }
    let tl = [is_top_left(b, c), is_top_left(c, a), is_top_left(a, b)];
    let inv_depth = t.depth.map(|d| 1.0 / d);
    for y in ymin..=ymax {
        for x in xmin..=xmax {
            let p = DVec2::new(x as f64 + 0.5, y as f64 + 0.5);
            let e = [edge(b, c, p), edge(c, a, p), edge(a, b, p)];
            let covered = (0..3).all(|k| e[k] > 0.0 || (e[k] == 0.0 && tl[k]));
            if !covered {
                continue;
            }
            // Screen-space barycentrics, then perspective correction.
            let l = [e[0] / area, e[1] / area, e[2] / area];
            let w = [l[0] * inv_depth[0], l[1] * inv_depth[1], l[2] * inv_depth[2]];
            let sum = w[0] + w[1] + w[2];
            if sum <= 0.0 {
                continue;
            }
            let depth = 1.0 / sum;
            let slot = &mut rows[(y - y_start) * size + x];
            if matches!(slot, Some(f) if f.depth <= depth) {
                continue;
            }
            let pc = [w[0] / sum, w[1] / sum, w[2] / sum];
            let bary = t.bary[0] * pc[0] + t.bary[1] * pc[1] + t.bary[2] * pc[2];
            *slot = Some(Fragment { depth, face: t.face, bary });
        }
    }
}

/// Renders `mesh` with the current paint state from `camera`.
pub fn render(mesh: &Mesh, state: &TextureState, camera: &OrbitCamera) -> Result<GBuffer, RenderError> {
    render_with(mesh, state, camera, &RenderOptions::default())
}

pub fn render_with(
    mesh: &Mesh,
    state: &TextureState,
    camera: &OrbitCamera,
    options: &RenderOptions,
) -> Result<GBuffer, RenderError> {
    let camera = camera.validated()?;
    let cam = camera.transforms();
    let size = camera.resolution;
    let tris = setup_triangles(mesh, &cam, size, options);
    let frags = rasterize(&tris, size);

    let (zmin, zmax) = frags
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f.depth), hi.max(f.depth)));
    if !zmin.is_finite() {
        return Err(RenderError::EmptyRender);
    }

    // Depths equal up to rounding count as a single-depth view.
    let spread = zmax - zmin > 1e-9 * zmax;
    let tex = state.texture();
    let weight = state.weight();
    let vcache = state.view_cos();
    let res = state.resolution();

    let mut g = GBuffer {
        width: size,
        height: size,
        rgb: Image::new(size, size, 3),
        object_mask: Mask::new(size, size),
        painted_mask: Mask::new(size, size),
        depth: Image::new(size, size, 1),
        normal: Image::new(size, size, 3),
        uv: Image::new(size, size, 2),
        view_cos: Image::new(size, size, 1),
        w_sampled: Image::new(size, size, 1),
        v_sampled: Image::new(size, size, 1),
    };

    for (p, frag) in frags.iter().enumerate() {
        let Some(f) = frag else { continue };
        let face = &mesh.faces[f.face as usize];
        let pos = mesh.face_positions(face);
        let nrm = mesh.face_normals(face);
        let uvs = mesh.face_uvs(face);
        let b = f.bary;
        let world = pos[0] * b.x + pos[1] * b.y + pos[2] * b.z;
        let normal = (nrm[0] * b.x + nrm[1] * b.y + nrm[2] * b.z)
            .try_normalize()
            .or_else(|| (pos[1] - pos[0]).cross(pos[2] - pos[0]).try_normalize())
            .unwrap_or(DVec3::Z);
        let uv = (uvs[0] * b.x + uvs[1] * b.y + uvs[2] * b.z).clamp(DVec2::ZERO, DVec2::ONE);
        let to_cam = (cam.position - world).normalize_or_zero();
        let view_cos = normal.dot(to_cam).clamp(0.0, 1.0);

        let (tx, ty) = nearest_texel(uv, res, res);
        let w = weight.get(tx, ty, 0);
        let v = vcache.get(tx, ty, 0);

        g.object_mask.data_mut()[p] = true;
        g.painted_mask.data_mut()[p] = w > 0.0;
        g.depth.data_mut()[p] = if spread { ((zmax - f.depth) / (zmax - zmin)) as f32 } else { 1.0 };
        g.normal.at_mut(p).copy_from_slice(&[normal.x as f32, normal.y as f32, normal.z as f32]);
        g.uv.at_mut(p).copy_from_slice(&[uv.x as f32, uv.y as f32]);
        g.view_cos.data_mut()[p] = view_cos as f32;
        g.w_sampled.data_mut()[p] = w;
        g.v_sampled.data_mut()[p] = v;
        let rgb = g.rgb.at_mut(p);
        if w > 0.0 {
            let (fx, fy) = uv_to_texel(uv, res, res);
            for (c, out) in rgb.iter_mut().enumerate() {
                *out = tex.sample_bilinear_texel(fx, fy, c);
            }
        } else {
            rgb.fill(UNPAINTED_GRAY);
        }
    }
    Ok(g)
}

/// Display modes of [`render_aux`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    #[default]
    Rgb,
    Depth,
    Alpha,
    Normal,
    Viewcos,
}

impl FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rgb" => Ok(Self::Rgb),
            "depth" => Ok(Self::Depth),
            "alpha" => Ok(Self::Alpha),
            "normal" => Ok(Self::Normal),
            "viewcos" | "view_cos" => Ok(Self::Viewcos),
            other => Err(format!("unknown render mode `{other}`")),
        }
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Rgb => "rgb",
            Self::Depth => "depth",
            Self::Alpha => "alpha",
            Self::Normal => "normal",
            Self::Viewcos => "viewcos",
        };
        f.write_str(s)
    }
}

/// Turns one G-buffer channel into a displayable RGB image. Scalar channels
/// are replicated; normals map through `(n + 1) / 2` on the object and stay
/// black on the background.
pub fn render_aux(g: &GBuffer, mode: RenderMode) -> Image {
    let mut out = Image::new(g.width, g.height, 3);
    for p in 0..g.pixel_count() {
        let px: [f32; 3] = match mode {
            RenderMode::Rgb => {
                let c = g.rgb.at(p);
                [c[0], c[1], c[2]]
            }
            RenderMode::Depth => [g.depth.data()[p]; 3],
            RenderMode::Alpha => [if g.object_mask.at(p) { 1.0 } else { 0.0 }; 3],
            RenderMode::Viewcos => [g.view_cos.data()[p]; 3],
            RenderMode::Normal => {
                if g.object_mask.at(p) {
                    let n = g.normal.at(p);
                    [(n[0] + 1.0) * 0.5, (n[1] + 1.0) * 0.5, (n[2] + 1.0) * 0.5]
                } else {
                    [0.0; 3]
                }
            }
        };
        out.at_mut(p).copy_from_slice(&px);
    }
    out
}
