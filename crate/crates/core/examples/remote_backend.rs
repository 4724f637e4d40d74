//! Runs the mock model behind the inpainting wire protocol and paints through
//! it as a remote backend, the way a real model server would be used. Set
//! `INTEX_BACKEND_URL` to paint through an external server instead.

use std::sync::Arc;

use texsynth::backend::{inpaint_router, BackendSpec, MockBackend, ServerHandle, BACKEND_URL_ENV};
use texsynth::fixtures;
use texsynth::service::{Session, SynthesisConfig};

fn main() -> anyhow::Result<()> {
    let (backend, _server) = match std::env::var(BACKEND_URL_ENV) {
        Ok(url) => (BackendSpec::parse(&url)?.build(), None),
        Err(_) => {
            let server = ServerHandle::spawn(inpaint_router(MockBackend::shared()))?;
            println!("mock model at {}", server.url());
            (BackendSpec::parse(&server.url())?.build(), Some(server))
        }
    };
    println!("backend {}", backend.id());

    let config = SynthesisConfig { view_resolution: 256, texture_resolution: 512, ..SynthesisConfig::default() };
    let session = Session::new(fixtures::uv_sphere(32, 64), config, Arc::clone(&backend))?;
    for (e, a) in [(0.0, 0.0), (0.0, 90.0), (0.0, 180.0), (0.0, -90.0)] {
        let r = session.inpaint_view(e, a, "mossy rock", 5)?;
        println!("({e}, {a}): {} ms in the backend, {} texels", r.backend_elapsed_ms, r.update.texels_updated);
    }
    println!("coverage {:.3}", session.coverage());
    Ok(())
}
