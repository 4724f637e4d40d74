use glam::{DVec2, DVec3};
use proptest::prelude::*;

use texsynth::camera::{camera_from_orbit, OrbitCamera};
use texsynth::fixtures::{facing_square, merge, uv_sphere};
use texsynth::raster::{render, render_aux, render_with, GBuffer, RenderError, RenderMode, RenderOptions};
use texsynth::synthesis::TextureState;
use texsynth::{Image, Mask, Mesh};

fn close(a: DVec3, b: DVec3, tol: f64) -> bool {
    (a - b).length() < tol
}

/// Where the ray through pixel (x, y) of a front camera meets the plane
/// `z = plane_z`.
fn front_ray_hit(x: usize, y: usize, size: usize, radius: f64, fovy_deg: f64, plane_z: f64) -> DVec3 {
    let t = (fovy_deg.to_radians() * 0.5).tan();
    let nx = ((x as f64 + 0.5) / size as f64) * 2.0 - 1.0;
    let ny = 1.0 - ((y as f64 + 0.5) / size as f64) * 2.0;
    let dist = radius - plane_z;
    DVec3::new(nx * t * dist, ny * t * dist, plane_z)
}

fn unit_square() -> Mesh {
    facing_square(0.0, 0.5, DVec2::ZERO, DVec2::ONE)
}

#[test]
fn orbit_camera_examples() {
    let c = camera_from_orbit(0.0, 0.0, 2.5, 50.0);
    assert!(close(c.position, DVec3::new(0.0, 0.0, 2.5), 1e-12));
    assert!(close(c.forward, DVec3::new(0.0, 0.0, -1.0), 1e-12));

    let c = camera_from_orbit(90.0, 0.0, 2.5, 50.0);
    assert!(close(c.position, DVec3::new(0.0, 2.5, 0.0), 1e-12));
    assert!(close(c.forward, DVec3::new(0.0, -1.0, 0.0), 1e-12));
    assert!(close(c.up, DVec3::new(0.0, 0.0, -1.0), 1e-12));

    let c = camera_from_orbit(-90.0, 0.0, 2.5, 50.0);
    assert!(close(c.up, DVec3::new(0.0, 0.0, 1.0), 1e-12));

    let c = camera_from_orbit(0.0, 90.0, 2.5, 50.0);
    assert!(close(c.position, DVec3::new(2.5, 0.0, 0.0), 1e-6));
}

#[test]
fn orbit_camera_validation() {
    assert!(OrbitCamera::new(0.0, 0.0).with_resolution(100).validated().is_err());
    assert!(OrbitCamera::new(0.0, 0.0).with_lens(0.0, 50.0).validated().is_err());
    assert!(OrbitCamera::new(0.0, 0.0).with_lens(2.5, 121.0).validated().is_err());
    assert!(OrbitCamera::new(91.0, 0.0).validated().is_err());
    let c = OrbitCamera::new(0.0, -180.0).validated().unwrap();
    assert_eq!(c.azimuth, 180.0);
}

#[test]
fn facing_square_gbuffer() {
    let size = 128;
    let state = TextureState::new(64).unwrap();
    let g = render(&unit_square(), &state, &OrbitCamera::new(0.0, 0.0).with_resolution(size)).unwrap();
    let half_px = 0.5 / (2.5 * 25f64.to_radians().tan()) * size as f64 / 2.0;
    let mut hits = 0;
    for y in 0..size {
        for x in 0..size {
            let p = y * size + x;
            let (dx, dy) = (x as f64 + 0.5 - size as f64 / 2.0, y as f64 + 0.5 - size as f64 / 2.0);
            if dx.abs() < half_px - 1.0 && dy.abs() < half_px - 1.0 {
                assert!(g.object_mask.at(p), "({x},{y}) inside the square");
            }
            if dx.abs() > half_px + 1.0 || dy.abs() > half_px + 1.0 {
                assert!(!g.object_mask.at(p), "({x},{y}) outside the square");
            }
            if !g.object_mask.at(p) {
                assert_eq!(g.depth.data()[p], 0.0);
                assert_eq!(g.view_cos.data()[p], 0.0);
                assert_eq!(g.rgb.at(p), &[0.0, 0.0, 0.0]);
                continue;
            }
            hits += 1;
            let hit = front_ray_hit(x, y, size, 2.5, 50.0, 0.0);
            let expected = (DVec3::new(0.0, 0.0, 2.5) - hit).normalize().z;
            assert!((g.view_cos.data()[p] as f64 - expected).abs() < 1e-5, "({x},{y})");
            assert_eq!(g.rgb.at(p), &[0.5; 3]);
            assert!(!g.painted_mask.at(p));
            let uv = g.uv_at(p);
            assert!((uv.x - (hit.x + 0.5)).abs() < 1e-4 && (uv.y - (hit.y + 0.5)).abs() < 1e-4);
        }
    }
    assert!(hits > 0);
    assert!(g.painted_mask.is_empty());
    let c = size / 2 * size + size / 2;
    assert!(g.view_cos.data()[c] > 0.9999);
}

#[test]
fn sphere_view_cosine_at_center_and_silhouette() {
    let size = 512;
    let g = render(&uv_sphere(128, 256), &TextureState::new(64).unwrap(), &OrbitCamera::new(0.0, 0.0)).unwrap();
    let c = size / 2 * size + size / 2;
    assert!(g.view_cos.data()[c] >= 0.99);
    let mut silhouette = 0;
    for y in 1..size - 1 {
        for x in 1..size - 1 {
            let p = y * size + x;
            if !g.object_mask.at(p) {
                continue;
            }
            let edge = [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)].iter().any(|&(a, b)| !g.object_mask.get(a, b));
            if edge {
                silhouette += 1;
                assert!(g.view_cos.data()[p] <= 0.1, "({x},{y}) cos {}", g.view_cos.data()[p]);
            }
        }
    }
    assert!(silhouette > 100);
}

#[test]
fn gbuffer_invariants_on_sphere() {
    let mut state = TextureState::new(64).unwrap();
    let mesh = uv_sphere(16, 32);
    let g0 = render(&mesh, &state, &OrbitCamera::new(0.0, 0.0).with_resolution(64)).unwrap();
    state = paint_everything(&state, 0.25);
    let g = render(&mesh, &state, &OrbitCamera::new(30.0, 60.0).with_resolution(64)).unwrap();
    assert!(g.painted_mask.is_subset_of(&g.object_mask));
    assert!(g0.painted_mask.is_empty());
    let depth = g.depth.data();
    let obj: Vec<f32> = (0..g.pixel_count()).filter(|&p| g.object_mask.at(p)).map(|p| depth[p]).collect();
    assert!(obj.iter().cloned().fold(f32::INFINITY, f32::min) < 0.01);
    assert!(obj.iter().cloned().fold(0.0, f32::max) > 0.99);
    for p in 0..g.pixel_count() {
        if g.object_mask.at(p) {
            let n = g.normal.at(p);
            let len = (n.iter().map(|v| v * v).sum::<f32>()).sqrt();
            assert!((len - 1.0).abs() < 1e-4);
            assert!(g.painted_mask.at(p));
        } else {
            assert_eq!((g.depth.data()[p], g.view_cos.data()[p], g.v_sampled.data()[p]), (0.0, 0.0, 0.0));
        }
    }
}

fn paint_everything(state: &TextureState, value: f32) -> TextureState {
    let r = state.resolution();
    TextureState::from_parts(Image::filled(r, r, 3, value), Image::filled(r, r, 1, 1.0), Image::filled(r, r, 1, 0.5))
        .unwrap()
}

#[test]
fn painted_pixels_sample_the_texture() {
    let state = paint_everything(&TextureState::new(64).unwrap(), 0.25);
    let g = render(&unit_square(), &state, &OrbitCamera::new(0.0, 0.0).with_resolution(64)).unwrap();
    let q = (0.25f32 * 255.0).round() / 255.0;
    for p in 0..g.pixel_count() {
        if g.object_mask.at(p) {
            assert!(g.painted_mask.at(p));
            assert!(g.rgb.at(p).iter().all(|&c| (c - q).abs() < 1e-6));
            assert_eq!(g.w_sampled.data()[p], 1.0);
            assert_eq!(g.v_sampled.data()[p], 0.5);
        }
    }
}

#[test]
fn nearer_square_gets_depth_one() {
    // Camera depths 1.5 and 3.5 from a camera at z = 2.5.
    let near = facing_square(1.0, 0.3, DVec2::ZERO, DVec2::new(0.5, 1.0));
    let far = facing_square(-1.0, 2.0, DVec2::new(0.5, 0.0), DVec2::ONE);
    let mesh = merge(&[far, near]);
    let size = 64;
    let g = render(&mesh, &TextureState::new(64).unwrap(), &OrbitCamera::new(0.0, 0.0).with_resolution(size)).unwrap();
    let (mut n_near, mut n_far) = (0, 0);
    for p in 0..g.pixel_count() {
        assert!(g.object_mask.at(p), "far square fills the frame");
        let d = g.depth.data()[p];
        if g.uv_at(p).x < 0.5 {
            n_near += 1;
            assert!((d - 1.0).abs() < 1e-6, "{d}");
        } else {
            n_far += 1;
            assert!(d.abs() < 1e-6, "{d}");
        }
    }
    assert!(n_near > 0 && n_far > 0);
}

#[test]
fn single_depth_view_normalizes_to_one() {
    let g = render(&unit_square(), &TextureState::new(64).unwrap(), &OrbitCamera::new(0.0, 0.0).with_resolution(64)).unwrap();
    for p in 0..g.pixel_count() {
        if g.object_mask.at(p) {
            assert!(g.depth.data()[p] > 0.99);
        }
    }
}

fn empty_gbuffer(size: usize) -> GBuffer {
    GBuffer {
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
    }
}

#[test]
fn aux_modes() {
    let out = render_aux(&empty_gbuffer(16), RenderMode::Alpha);
    assert!(out.data().iter().all(|&v| v == 0.0));

    let g = render(&unit_square(), &TextureState::new(64).unwrap(), &OrbitCamera::new(0.0, 0.0).with_resolution(64)).unwrap();
    let normal = render_aux(&g, RenderMode::Normal);
    let depth = render_aux(&g, RenderMode::Depth);
    let alpha = render_aux(&g, RenderMode::Alpha);
    let viewcos = render_aux(&g, RenderMode::Viewcos);
    let rgb = render_aux(&g, RenderMode::Rgb);
    assert_eq!(rgb, g.rgb);
    for p in 0..g.pixel_count() {
        let d = g.depth.data()[p];
        assert_eq!(depth.at(p), &[d, d, d]);
        let v = g.view_cos.data()[p];
        assert_eq!(viewcos.at(p), &[v, v, v]);
        if g.object_mask.at(p) {
            let n = normal.at(p);
            assert!((n[0] - 0.5).abs() < 1e-6 && (n[1] - 0.5).abs() < 1e-6 && (n[2] - 1.0).abs() < 1e-6);
            assert_eq!(alpha.at(p), &[1.0; 3]);
        } else {
            assert_eq!(alpha.at(p), &[0.0; 3]);
        }
    }
    assert_eq!("viewcos".parse::<RenderMode>().unwrap(), RenderMode::Viewcos);
    assert!("sepia".parse::<RenderMode>().is_err());
}

#[test]
fn object_out_of_frame_is_an_empty_render() {
    let far_away = facing_square(0.0, 0.1, DVec2::ZERO, DVec2::ONE);
    let mut shifted = far_away.clone();
    for v in &mut shifted.vertices {
        v.x += 10.0;
    }
    let err = render(&shifted, &TextureState::new(64).unwrap(), &OrbitCamera::new(0.0, 0.0).with_resolution(64)).unwrap_err();
    assert!(matches!(err, RenderError::EmptyRender));
}

#[test]
fn rendering_is_deterministic() {
    let mesh = uv_sphere(24, 48);
    let state = paint_everything(&TextureState::new(128).unwrap(), 0.7);
    let cam = OrbitCamera::new(20.0, -35.0).with_resolution(256);
    let a = render(&mesh, &state, &cam).unwrap();
    let b = render(&mesh, &state, &cam).unwrap();
    assert_eq!(a, b);
    let bits = |g: &GBuffer| g.view_cos.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn view_cos_ignores_the_texture() {
    let mesh = uv_sphere(16, 32);
    let cam = OrbitCamera::new(10.0, 100.0).with_resolution(96);
    let a = render(&mesh, &TextureState::new(64).unwrap(), &cam).unwrap();
    let b = render(&mesh, &paint_everything(&TextureState::new(64).unwrap(), 0.9), &cam).unwrap();
    assert_eq!(a.view_cos, b.view_cos);
    assert_eq!(a.object_mask, b.object_mask);
    assert_ne!(a.rgb, b.rgb);
}

#[test]
fn back_faces_are_culled() {
    let sphere = uv_sphere(16, 32);
    let eye = DVec3::new(0.0, 0.0, 2.5);
    let mut back = sphere.clone();
    back.faces.retain(|f| {
        let p = sphere.face_positions(f);
        let n = (p[1] - p[0]).cross(p[2] - p[0]);
        n.dot(eye - (p[0] + p[1] + p[2]) / 3.0) < 0.0
    });
    assert!(!back.faces.is_empty());
    let state = TextureState::new(64).unwrap();
    let cam = OrbitCamera::new(0.0, 0.0).with_resolution(64);
    assert!(matches!(render(&back, &state, &cam), Err(RenderError::EmptyRender)));
    let two_sided = render_with(&back, &state, &cam, &RenderOptions { cull_back_faces: false }).unwrap();
    assert!(two_sided.object_mask.count() > 0);

    // On the whole sphere, culling removes nothing visible.
    let culled = render(&sphere, &state, &cam).unwrap();
    let unculled = render_with(&sphere, &state, &cam, &RenderOptions { cull_back_faces: false }).unwrap();
    assert_eq!(culled.object_mask, unculled.object_mask);
    assert_eq!(culled.uv, unculled.uv);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nearer_surface_wins_the_depth_test(
        za in -0.9f64..0.9, zb in -0.9f64..0.9,
        ha in 0.1f64..0.7, hb in 0.1f64..0.7,
        ox in -0.3f64..0.3, oy in -0.3f64..0.3,
        a_first in any::<bool>(),
    ) {
        prop_assume!((za - zb).abs() > 0.02);
        let a = facing_square(za, ha, DVec2::ZERO, DVec2::new(0.4, 1.0));
        let mut b = facing_square(zb, hb, DVec2::new(0.6, 0.0), DVec2::ONE);
        for v in &mut b.vertices {
            v.x += ox;
            v.y += oy;
        }
        let both = if a_first { merge(&[a.clone(), b.clone()]) } else { merge(&[b.clone(), a.clone()]) };
        let state = TextureState::new(64).unwrap();
        let cam = OrbitCamera::new(0.0, 0.0).with_resolution(64);
        let ga = render(&a, &state, &cam).unwrap();
        let gb = render(&b, &state, &cam).unwrap();
        let g = render(&both, &state, &cam).unwrap();
        let a_near = za > zb;
        for p in 0..g.pixel_count() {
            let (ia, ib) = (ga.object_mask.at(p), gb.object_mask.at(p));
            prop_assert_eq!(g.object_mask.at(p), ia || ib);
            let expect = match (ia, ib) {
                (true, true) => if a_near { &ga } else { &gb },
                (true, false) => &ga,
                (false, true) => &gb,
                (false, false) => continue,
            };
            prop_assert_eq!(g.uv.at(p), expect.uv.at(p));
            prop_assert_eq!(g.normal.at(p), expect.normal.at(p));
        }
    }
}
