//! Interactive text-to-texture synthesis for UV-mapped meshes.
//!
//! A mesh is painted view by view: each view is rendered into a G-buffer,
//! split into generate / refine / keep regions, sent to a depth-aware
//! inpainting backend, and the result is back-projected into the texture
//! atlas. Users can steer the process by choosing views, erasing regions and
//! undoing steps, either through [`service::Session`] directly, the HTTP
//! API, or the `texsynth` command line tool.
//!
//! ```no_run
//! use texsynth::backend::MockBackend;
//! use texsynth::service::{Session, SynthesisConfig};
//! use texsynth::fixtures;
//!
//! let mesh = fixtures::uv_sphere(32, 64);
//! let session = Session::new(mesh, SynthesisConfig::default(), MockBackend::shared()).unwrap();
//! let report = session.run_auto("a wooden ball", 42).unwrap();
//! println!("{} views, coverage {:.3}", report.views.len(), session.coverage());
//! ```
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`.

pub mod backend;
pub mod camera;
pub mod experiments;
pub mod fixtures;
pub mod image_buf;
pub mod mesh;
pub mod raster;
pub mod service;
pub mod synthesis;
pub mod texel;

pub use camera::OrbitCamera;
pub use image_buf::{Image, Mask};
pub use mesh::{load_obj, normalize_mesh, save_textured_mesh, Mesh};
pub use raster::{render, render_aux, GBuffer, RenderMode};
pub use synthesis::{blend_keep, compute_trimap, grid_put, TextureState, Trimap};
