//! Loads an OBJ (or the built-in cube), normalizes it and writes every render
//! mode for one viewpoint.
//!
//! cargo run --release --example load_and_render -- [mesh.obj] [elevation] [azimuth]

use std::path::Path;

use texsynth::image_buf::{encode_gray16, encode_rgb8};
use texsynth::synthesis::TextureState;
use texsynth::{fixtures, load_obj, normalize_mesh, render, render_aux, OrbitCamera, RenderMode};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let obj = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => fixtures::unit_cube_obj(),
    };
    let elevation: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20.0);
    let azimuth: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30.0);

    let mesh = normalize_mesh(&load_obj(obj.as_bytes())?)?;
    println!("{} vertices, {} faces", mesh.vertices.len(), mesh.faces.len());
    let state = TextureState::new(256)?;
    let g = render(&mesh, &state, &OrbitCamera::new(elevation, azimuth).with_resolution(256))?;
    println!("{} object pixels", g.object_mask.count());

    let out = Path::new("out/load_and_render");
    std::fs::create_dir_all(out)?;
    for mode in [RenderMode::Rgb, RenderMode::Alpha, RenderMode::Normal, RenderMode::Viewcos] {
        std::fs::write(out.join(format!("{mode}.png")), encode_rgb8(&render_aux(&g, mode))?)?;
    }
    std::fs::write(out.join("depth.png"), encode_gray16(&g.depth)?)?;
    println!("wrote {}", out.display());
    Ok(())
}
