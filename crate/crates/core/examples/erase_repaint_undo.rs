//! Paints a sphere, erases the left half of the front view, repaints it with
//! another seed, then walks the undo history back.

use texsynth::backend::MockBackend;
use texsynth::fixtures;
use texsynth::service::{Session, SynthesisConfig};
use texsynth::synthesis::UndoStatus;
use texsynth::Mask;

fn main() -> anyhow::Result<()> {
    let config = SynthesisConfig { view_resolution: 256, texture_resolution: 512, ..SynthesisConfig::default() };
    let session = Session::new(fixtures::uv_sphere(32, 64), config, MockBackend::shared())?;
    session.run_auto("", 1)?;
    println!("painted {} texels, coverage {:.3}", session.snapshot().painted_count(), session.coverage());

    let mask = Mask::from_fn(256, 256, |x, _| x < 128);
    let cleared = session.erase(0.0, 0.0, &mask)?;
    println!("erased {cleared} texels, coverage {:.3}", session.coverage());

    let report = session.inpaint_view(0.0, 0.0, "", 2)?;
    println!("repaint: generate {} refine {} keep {}", report.trimap.generate, report.trimap.refine, report.trimap.keep);
    println!("coverage {:.3}, history {}", session.coverage(), session.history_depth());

    while session.undo()? == UndoStatus::Restored {
        println!("undo -> history {}, coverage {:.3}", session.history_depth(), session.coverage());
    }
    Ok(())
}
