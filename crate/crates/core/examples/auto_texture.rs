//! Paints a UV sphere from the ten preset viewpoints with the mock backend
//! and writes the textured mesh.
//!
//! cargo run --release --example auto_texture -- [out_dir] [seed]

use std::path::PathBuf;
use std::time::Instant;

use texsynth::backend::MockBackend;
use texsynth::fixtures;
use texsynth::service::{Session, SynthesisConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/auto_texture".into()));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let session = Session::new(fixtures::uv_sphere(32, 64), SynthesisConfig::default(), MockBackend::shared())?;
    let start = Instant::now();
    let report = session.run_auto("a weathered stone ball", seed)?;
    for v in &report.views {
        println!(
            "({:>4}, {:>5})  generate {:>6}  refine {:>6}  keep {:>6}  texels {:>7}  {}",
            v.elevation, v.azimuth, v.trimap.generate, v.trimap.refine, v.trimap.keep, v.update.texels_updated, v.prompt
        );
    }
    println!("dilated {} texels", report.dilated_texels);
    println!("coverage {:.2}% in {:.2?}", report.coverage * 100.0, start.elapsed());
    let saved = session.save(&out)?;
    println!("wrote {}", saved.dir.display());
    Ok(())
}
