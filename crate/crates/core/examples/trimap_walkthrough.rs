//! Paints the front of a sphere, then shows how a camera sweeping sideways
//! splits its view into generate, refine and keep pixels.
//!
//! cargo run --release --example trimap_walkthrough

use texsynth::backend::MockBackend;
use texsynth::fixtures;
use texsynth::service::{Session, SynthesisConfig};
use texsynth::synthesis::compute_trimap;

fn main() -> anyhow::Result<()> {
    let config = SynthesisConfig { view_resolution: 256, ..SynthesisConfig::default() };
    let session = Session::new(fixtures::uv_sphere(32, 64), config, MockBackend::shared())?;
    session.inpaint_view(0.0, 0.0, "", 0)?;

    println!("{:>8} {:>9} {:>9} {:>9}", "azimuth", "generate", "refine", "keep");
    for azimuth in [0.0, 15.0, 30.0, 45.0, 60.0, 90.0, 135.0, 180.0] {
        let Some(g) = session.render_gbuffer(&session.camera(0.0, azimuth))? else { continue };
        let c = compute_trimap(&g, session.config().refine_margin).counts();
        println!("{azimuth:>8} {:>9} {:>9} {:>9}", c.generate, c.refine, c.keep);
    }
    Ok(())
}
