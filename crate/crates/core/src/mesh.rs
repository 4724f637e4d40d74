//! UV-mapped triangle meshes: Wavefront OBJ loading, normalization, and
//! textured export (OBJ + MTL + PNG albedo).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use glam::{DVec2, DVec3};
use thiserror::Error;

use crate::image_buf::{self, CodecError, Image, Mask};
use crate::texel::uv_to_texel;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: face corner has no texture coordinate")]
    MissingUv { line: usize },
    #[error("degenerate mesh: {0}")]
    Degenerate(String),
    #[error("invalid texture: {0}")]
    InvalidTexture(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

pub type MeshResult<T> = Result<T, MeshError>;

/// One triangle corner: indices into the position, normal and UV arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corner {
    pub position: u32,
    pub normal: u32,
    pub uv: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub corners: [Corner; 3],
}

/// Indexed triangle mesh with per-corner normal and UV references.
///
/// Overlapping UV charts are allowed; several faces may map to the same texels.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub name: String,
    pub vertices: Vec<DVec3>,
    pub normals: Vec<DVec3>,
    pub uvs: Vec<DVec2>,
    pub faces: Vec<Face>,
}

impl Mesh {
    pub fn face_positions(&self, face: &Face) -> [DVec3; 3] {
        face.corners.map(|c| self.vertices[c.position as usize])
    }

    pub fn face_uvs(&self, face: &Face) -> [DVec2; 3] {
        face.corners.map(|c| self.uvs[c.uv as usize])
    }

    pub fn face_normals(&self, face: &Face) -> [DVec3; 3] {
        face.corners.map(|c| self.normals[c.normal as usize])
    }

    /// Texels of a `res` x `res` atlas whose centers fall inside some UV
    /// triangle (edges inclusive).
    pub fn uv_coverage(&self, res: usize) -> Mask {
        let mut mask = Mask::new(res, res);
        for face in &self.faces {
            let t = self.face_uvs(face).map(|uv| {
                let (x, y) = uv_to_texel(uv, res, res);
                DVec2::new(x, y)
            });
            let area = (t[1] - t[0]).perp_dot(t[2] - t[0]);
            if area == 0.0 {
                continue;
            }
            let lo = t[0].min(t[1]).min(t[2]).ceil().max(DVec2::ZERO);
            let hi = t[0].max(t[1]).max(t[2]).floor().min(DVec2::splat((res - 1) as f64));
            if lo.x > hi.x || lo.y > hi.y {
                continue;
            }
            for y in lo.y as usize..=hi.y as usize {
                for x in lo.x as usize..=hi.x as usize {
                    let p = DVec2::new(x as f64, y as f64);
                    let inside = (0..3).all(|k| {
                        let (a, b) = (t[k], t[(k + 1) % 3]);
                        (b - a).perp_dot(p - a) * area.signum() >= 0.0
                    });
                    if inside {
                        mask.set(x, y, true);
                    }
                }
            }
        }
        mask
    }

    /// Checks index ranges, unit normals and the UV domain.
    pub fn validate(&self) -> MeshResult<()> {
        for (i, f) in self.faces.iter().enumerate() {
            for c in &f.corners {
                let ok = (c.position as usize) < self.vertices.len()
                    && (c.normal as usize) < self.normals.len()
                    && (c.uv as usize) < self.uvs.len();
                if !ok {
                    return Err(MeshError::Degenerate(format!("face {i} has an out-of-range index")));
                }
                let n = self.normals[c.normal as usize].length();
                if (n - 1.0).abs() > 1e-4 {
                    return Err(MeshError::Degenerate(format!("face {i} references a non-unit normal")));
                }
                let uv = self.uvs[c.uv as usize];
                if !(0.0..=1.0).contains(&uv.x) || !(0.0..=1.0).contains(&uv.y) {
                    return Err(MeshError::Degenerate(format!("face {i} references a UV outside [0,1]")));
                }
            }
        }
        Ok(())
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn parse_floats<const N: usize>(line: usize, parts: &[&str], min: usize) -> MeshResult<[f64; N]> {
    if parts.len() < min {
        return Err(parse_err(line, format!("expected at least {min} numbers")));
    }
    let mut out = [0.0; N];
    for (slot, tok) in out.iter_mut().zip(parts) {
        let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("bad number `{tok}`")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite number `{tok}`")));
        }
        *slot = v;
    }
    Ok(out)
}

/// Resolves a 1-based (or negative, relative) OBJ index against `len` elements.
fn resolve_index(line: usize, tok: &str, len: usize, what: &str) -> MeshResult<u32> {
    let raw: i64 = tok.parse().map_err(|_| parse_err(line, format!("bad {what} index `{tok}`")))?;
    let idx = match raw {
        0 => return Err(parse_err(line, format!("{what} index 0 is invalid"))),
        r if r > 0 => r - 1,
        r => len as i64 + r,
    };
    if idx < 0 || idx as usize >= len {
        return Err(parse_err(line, format!("{what} index {raw} out of range ({len} defined)")));
    }
    Ok(idx as u32)
}

fn wrap_unit(v: f64) -> f64 {
    if (0.0..=1.0).contains(&v) {
        v
    } else {
        v - v.floor()
    }
}

#[derive(Clone, Copy)]
struct RawCorner {
    position: u32,
    uv: u32,
    normal: Option<u32>,
}

/// Parses Wavefront OBJ text into a validated mesh.
///
/// Polygons are fan-triangulated, UVs outside [0,1] are wrapped by their
/// fractional part, and normals are renormalized. Corners without a `vn`
/// reference receive area-weighted vertex normals.
pub fn load_obj(bytes: &[u8]) -> MeshResult<Mesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_err(0, format!("not UTF-8: {e}")))?;
    let mut name = String::from("mesh");
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    let mut normals = Vec::new();
    let mut faces: Vec<[RawCorner; 3]> = Vec::new();

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap_or("");
        let rest: Vec<&str> = parts.collect();
        match keyword {
            "v" => {
                let [x, y, z] = parse_floats::<3>(line_no, &rest, 3)?;
                vertices.push(DVec3::new(x, y, z));
            }
            "vt" => {
                let [u, v] = parse_floats::<2>(line_no, &rest, 2)?;
                uvs.push(DVec2::new(wrap_unit(u), wrap_unit(v)));
            }
            "vn" => {
                let [x, y, z] = parse_floats::<3>(line_no, &rest, 3)?;
                normals.push(DVec3::new(x, y, z));
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(parse_err(line_no, "face needs at least 3 vertices"));
                }
                let mut poly = Vec::with_capacity(rest.len());
                for tok in &rest {
                    let mut fields = tok.split('/');
                    let p = fields.next().unwrap_or("");
                    let t = fields.next().unwrap_or("");
                    let n = fields.next().unwrap_or("");
                    if fields.next().is_some() {
                        return Err(parse_err(line_no, format!("bad face vertex `{tok}`")));
                    }
                    let position = resolve_index(line_no, p, vertices.len(), "position")?;
                    if t.is_empty() {
                        return Err(MeshError::MissingUv { line: line_no });
                    }
                    let uv = resolve_index(line_no, t, uvs.len(), "uv")?;
                    let normal = if n.is_empty() {
                        None
                    } else {
                        Some(resolve_index(line_no, n, normals.len(), "normal")?)
                    };
                    poly.push(RawCorner { position, uv, normal });
                }
                for k in 1..poly.len() - 1 {
                    faces.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            "o" if !rest.is_empty() => name = rest.join(" "),
            // Groups, smoothing, materials and other records don't affect geometry.
            _ => {}
        }
    }

    finish_mesh(name, vertices, normals, uvs, faces)
}

fn face_normal(p: [DVec3; 3]) -> DVec3 {
    (p[1] - p[0]).cross(p[2] - p[0])
}

fn finish_mesh(
    name: String,
    vertices: Vec<DVec3>,
    mut normals: Vec<DVec3>,
    uvs: Vec<DVec2>,
    raw_faces: Vec<[RawCorner; 3]>,
) -> MeshResult<Mesh> {
    let needs_vertex_normals = raw_faces.iter().flatten().any(|c| c.normal.is_none());
    let vertex_normal_base = normals.len() as u32;
    if needs_vertex_normals {
        // Unnormalized cross products weight each face by its area.
        let mut acc = vec![DVec3::ZERO; vertices.len()];
        for f in &raw_faces {
            let p = [0, 1, 2].map(|k| vertices[f[k].position as usize]);
            let n = face_normal(p);
            for c in f {
                acc[c.position as usize] += n;
            }
        }
        normals.extend(acc);
    }

    let unit: Vec<Option<DVec3>> = normals
        .iter()
        .map(|n| {
            let len = n.length();
            (len > 1e-12 && len.is_finite()).then(|| *n / len)
        })
        .collect();
    let mut normals: Vec<DVec3> = unit.iter().map(|n| n.unwrap_or(DVec3::Z)).collect();

    let mut faces = Vec::with_capacity(raw_faces.len());
    for f in &raw_faces {
        let p = [0, 1, 2].map(|k| vertices[f[k].position as usize]);
        let mut corners = [Corner { position: 0, normal: 0, uv: 0 }; 3];
        for (k, c) in f.iter().enumerate() {
            let mut normal = c.normal.unwrap_or(vertex_normal_base + c.position);
            if unit[normal as usize].is_none() {
                let fnorm = face_normal(p).try_normalize().unwrap_or(DVec3::Z);
                normals.push(fnorm);
                normal = (normals.len() - 1) as u32;
            }
            corners[k] = Corner { position: c.position, normal, uv: c.uv };
        }
        faces.push(Face { corners });
    }

    let mesh = Mesh { name, vertices, normals, uvs, faces };
    mesh.validate()?;
    Ok(mesh)
}

/// Centers the bounding box on the origin and scales so the farthest vertex
/// sits at distance 1.
pub fn normalize_mesh(mesh: &Mesh) -> MeshResult<Mesh> {
    if mesh.vertices.is_empty() {
        return Err(MeshError::Degenerate("mesh has no vertices".into()));
    }
    let (lo, hi) = mesh
        .vertices
        .iter()
        .fold((DVec3::splat(f64::INFINITY), DVec3::splat(f64::NEG_INFINITY)), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    let center = (lo + hi) * 0.5;
    let radius = mesh.vertices.iter().map(|v| (*v - center).length()).fold(0.0, f64::max);
    if radius <= 1e-12 {
        return Err(MeshError::Degenerate("all vertices coincide".into()));
    }
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        *v = (*v - center) / radius;
    }
    Ok(out)
}

/// Serializes the mesh as OBJ text referencing `mtl_name` (if given).
pub fn write_obj(mesh: &Mesh, mtl_name: Option<&str>) -> String {
    let mut s = String::new();
    if let Some(mtl) = mtl_name {
        let _ = writeln!(s, "mtllib {mtl}");
    }
    let _ = writeln!(s, "o {}", mesh.name);
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.uvs {
        let _ = writeln!(s, "vt {} {}", t.x, t.y);
    }
    for n in &mesh.normals {
        let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
    }
    if mtl_name.is_some() {
        s.push_str("usemtl material\n");
    }
    for f in &mesh.faces {
        s.push('f');
        for c in &f.corners {
            let _ = write!(s, " {}/{}/{}", c.position + 1, c.uv + 1, c.normal + 1);
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone)]
pub struct SavedMesh {
    pub obj: PathBuf,
    pub mtl: PathBuf,
    pub albedo: PathBuf,
}

pub const OBJ_FILE: &str = "mesh.obj";
pub const MTL_FILE: &str = "mesh.mtl";
pub const ALBEDO_FILE: &str = "albedo.png";

/// Writes `mesh.obj`, `mesh.mtl` and `albedo.png` (8-bit RGB) into `dir`.
pub fn save_textured_mesh(mesh: &Mesh, texture: &Image, dir: &Path) -> MeshResult<SavedMesh> {
    if texture.channels() != 3 {
        return Err(MeshError::InvalidTexture(format!(
            "albedo needs 3 channels, got {}",
            texture.channels()
        )));
    }
    fs::create_dir_all(dir)?;
    let saved = SavedMesh { obj: dir.join(OBJ_FILE), mtl: dir.join(MTL_FILE), albedo: dir.join(ALBEDO_FILE) };
    let png = image_buf::encode_rgb8(texture)?;
    fs::write(&saved.obj, write_obj(mesh, Some(MTL_FILE)))?;
    fs::write(
        &saved.mtl,
        format!("newmtl material\nKa 1 1 1\nKd 1 1 1\nKs 0 0 0\nmap_Kd {ALBEDO_FILE}\n"),
    )?;
    fs::write(&saved.albedo, png)?;
    Ok(saved)
}

/// Reads back what [`save_textured_mesh`] wrote.
pub fn load_textured_mesh(dir: &Path) -> MeshResult<(Mesh, Image)> {
    let mesh = load_obj(&fs::read(dir.join(OBJ_FILE))?)?;
    let albedo = image_buf::decode_rgb(&fs::read(dir.join(ALBEDO_FILE))?)?;
    Ok((mesh, albedo))
}
