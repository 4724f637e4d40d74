//! Procedural meshes with known geometry and UV layouts, used by the tests,
//! the examples and the HTTP demo.

use std::f64::consts::PI;

use glam::{DVec2, DVec3};

use crate::mesh::{Corner, Face, Mesh};

fn corner(i: usize) -> Corner {
    Corner { position: i as u32, normal: i as u32, uv: i as u32 }
}

/// Unit sphere with an equirectangular UV layout.
///
/// `stacks` rings run from the north pole (+Y, v = 1) to the south pole;
/// `slices` segments run around Y with u = 0 at +Z, increasing toward +X.
/// The seam column is duplicated so UVs stay continuous.
pub fn uv_sphere(stacks: usize, slices: usize) -> Mesh {
    assert!(stacks >= 2 && slices >= 3);
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    for i in 0..=stacks {
        let theta = PI * i as f64 / stacks as f64;
        for j in 0..=slices {
            let phi = 2.0 * PI * j as f64 / slices as f64;
            vertices.push(DVec3::new(theta.sin() * phi.sin(), theta.cos(), theta.sin() * phi.cos()));
            uvs.push(DVec2::new(j as f64 / slices as f64, 1.0 - i as f64 / stacks as f64));
        }
    }
    let normals = vertices.iter().map(|v| v.normalize()).collect();
    let idx = |i: usize, j: usize| i * (slices + 1) + j;
    let mut faces = Vec::new();
    for i in 0..stacks {
        for j in 0..slices {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if i != stacks - 1 {
                faces.push(Face { corners: [corner(a), corner(b), corner(c)] });
            }
            if i != 0 {
                faces.push(Face { corners: [corner(a), corner(c), corner(d)] });
            }
        }
    }
    Mesh { name: "sphere".into(), vertices, normals, uvs, faces }
}

/// Axis-aligned square in the plane `z`, facing +Z, spanning
/// `[-half, half]` in x and y. The UV chart is the rectangle `uv_min..uv_max`.
pub fn facing_square(z: f64, half: f64, uv_min: DVec2, uv_max: DVec2) -> Mesh {
    let vertices = vec![
        DVec3::new(-half, -half, z),
        DVec3::new(half, -half, z),
        DVec3::new(half, half, z),
        DVec3::new(-half, half, z),
    ];
    let uvs = vec![
        uv_min,
        DVec2::new(uv_max.x, uv_min.y),
        uv_max,
        DVec2::new(uv_min.x, uv_max.y),
    ];
    let normals = vec![DVec3::Z; 4];
    let faces = vec![
        Face { corners: [corner(0), corner(1), corner(2)] },
        Face { corners: [corner(0), corner(2), corner(3)] },
    ];
    Mesh { name: "square".into(), vertices, normals, uvs, faces }
}

/// Concatenates meshes, offsetting indices.
pub fn merge(meshes: &[Mesh]) -> Mesh {
    let mut out = Mesh { name: "merged".into(), vertices: vec![], normals: vec![], uvs: vec![], faces: vec![] };
    for m in meshes {
        let (pv, pn, pt) = (out.vertices.len() as u32, out.normals.len() as u32, out.uvs.len() as u32);
        out.vertices.extend(&m.vertices);
        out.normals.extend(&m.normals);
        out.uvs.extend(&m.uvs);
        out.faces.extend(m.faces.iter().map(|f| Face {
            corners: f.corners.map(|c| Corner { position: c.position + pv, normal: c.normal + pn, uv: c.uv + pt }),
        }));
    }
    out
}

/// Unit cube OBJ (corner at the origin) with 12 triangles and a 3x2 UV atlas,
/// one cell per face, 24 texture coordinates.
pub fn unit_cube_obj() -> String {
    let mut s = String::from("# unit cube\no cube\n");
    for z in [0, 1] {
        for y in [0, 1] {
            for x in [0, 1] {
                s.push_str(&format!("v {x} {y} {z}\n"));
            }
        }
    }
    // Position index (1-based) of corner (x, y, z).
    let vi = |x: usize, y: usize, z: usize| 1 + x + 2 * y + 4 * z;
    // Each face as four corners, counter-clockwise seen from outside.
    let quads: [([usize; 4], [f64; 3]); 6] = [
        ([vi(0, 0, 1), vi(1, 0, 1), vi(1, 1, 1), vi(0, 1, 1)], [0.0, 0.0, 1.0]),
        ([vi(1, 0, 0), vi(0, 0, 0), vi(0, 1, 0), vi(1, 1, 0)], [0.0, 0.0, -1.0]),
        ([vi(1, 0, 1), vi(1, 0, 0), vi(1, 1, 0), vi(1, 1, 1)], [1.0, 0.0, 0.0]),
        ([vi(0, 0, 0), vi(0, 0, 1), vi(0, 1, 1), vi(0, 1, 0)], [-1.0, 0.0, 0.0]),
        ([vi(0, 1, 1), vi(1, 1, 1), vi(1, 1, 0), vi(0, 1, 0)], [0.0, 1.0, 0.0]),
        ([vi(0, 0, 0), vi(1, 0, 0), vi(1, 0, 1), vi(0, 0, 1)], [0.0, -1.0, 0.0]),
    ];
    for (k, _) in quads.iter().enumerate() {
        let (cx, cy) = ((k % 3) as f64, (k / 3) as f64);
        let (u0, u1) = (cx / 3.0 + 0.01, (cx + 1.0) / 3.0 - 0.01);
        let (v0, v1) = (cy / 2.0 + 0.01, (cy + 1.0) / 2.0 - 0.01);
        for (u, v) in [(u0, v0), (u1, v0), (u1, v1), (u0, v1)] {
            s.push_str(&format!("vt {u} {v}\n"));
        }
    }
    for (_, n) in &quads {
        s.push_str(&format!("vn {} {} {}\n", n[0], n[1], n[2]));
    }
    for (k, (q, _)) in quads.iter().enumerate() {
        let t = |c: usize| 1 + 4 * k + c;
        let n = k + 1;
        s.push_str(&format!("f {}/{}/{n} {}/{}/{n} {}/{}/{n}\n", q[0], t(0), q[1], t(1), q[2], t(2)));
        s.push_str(&format!("f {}/{}/{n} {}/{}/{n} {}/{}/{n}\n", q[0], t(0), q[2], t(2), q[3], t(3)));
    }
    s
}
