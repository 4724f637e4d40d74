//! Command-line front end: batch synthesis, the HTTP service, and the sparse
//! reconstruction demo.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use texsynth::backend::{BackendSpec, BACKEND_URL_ENV};
use texsynth::experiments::{sparse_reconstruction, synthetic_photo};
use texsynth::image_buf::{decode_rgb, encode_rgb8};
use texsynth::mesh::load_obj;
use texsynth::service::{self, parse_views, preset_cameras, Session, SessionStore, SynthesisConfig};

#[derive(Parser)]
#[command(name = "texsynth", version, about = "Text-driven texture painting for UV-mapped meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Paint a mesh from a list of views and save the textured result.
    Synth {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value = "")]
        prompt: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `mock` or the URL of an inpainting server.
        #[arg(long, env = BACKEND_URL_ENV, default_value = "mock")]
        backend: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        texture_res: Option<usize>,
        /// `preset` or `"elevation,azimuth;elevation,azimuth;..."`.
        #[arg(long, default_value = "preset")]
        views: String,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = BACKEND_URL_ENV, default_value = "mock")]
        backend: String,
        /// Where sessions saved without a path go.
        #[arg(long, default_value = "sessions")]
        save_root: PathBuf,
    },
    /// Rebuild an image from a random fraction of its pixels, mipmap splat
    /// against naive splat.
    GridputDemo {
        /// PNG to sample; a procedural test image when omitted.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        keep_fraction: f64,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for input, naive and mipmap PNGs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth { mesh, prompt, seed, backend, out, texture_res, views } => {
            let backend = BackendSpec::parse(&backend)?.build();
            let obj = std::fs::read(&mesh).with_context(|| format!("reading {}", mesh.display()))?;
            let mesh = load_obj(&obj).with_context(|| format!("parsing {}", mesh.display()))?;
            let mut config = SynthesisConfig::default();
            if let Some(res) = texture_res {
                config.texture_resolution = res;
            }
            let views = if views.trim() == "preset" { preset_cameras().to_vec() } else { parse_views(&views)? };
            let session = Session::new(mesh, config, backend)?;
            let report = session.run_views(&views, &prompt, seed)?;
            for v in &report.views {
                println!(
                    "view ({}, {}): generate {} refine {} keep {} texels {}",
                    v.elevation, v.azimuth, v.trimap.generate, v.trimap.refine, v.trimap.keep, v.update.texels_updated
                );
            }
            let saved = session.save(&out)?;
            println!("coverage {:.4}", report.coverage);
            println!("saved {}", saved.dir.display());
        }
        Command::Serve { port, host, backend, save_root } => {
            let backend = BackendSpec::parse(&backend)?.build();
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad host/port")?;
            let store = Arc::new(SessionStore::new(backend, save_root));
            tokio::runtime::Runtime::new()?.block_on(service::serve(addr, store))?;
        }
        Command::GridputDemo { image, keep_fraction, levels, seed, out } => {
            if !(0.0..=1.0).contains(&keep_fraction) {
                bail!("keep-fraction must be in [0, 1]");
            }
            let img = match &image {
                Some(path) => {
                    let img = decode_rgb(&std::fs::read(path).with_context(|| format!("reading {}", path.display()))?)?;
                    if img.width() == img.height() && img.width().is_power_of_two() {
                        img
                    } else {
                        img.resize_bilinear(512, 512)
                    }
                }
                None => synthetic_photo(512, seed),
            };
            let r = sparse_reconstruction(&img, keep_fraction, levels, seed)?;
            println!("samples {} into {}x{}", r.samples, r.size, r.size);
            println!(
                "naive  hole fraction {:.4}  psnr(filled) {:.2} dB  psnr(common) {:.2} dB",
                r.naive_hole_fraction, r.naive_psnr_filled, r.naive_psnr_common
            );
            println!(
                "mipmap hole fraction {:.4}  psnr(filled) {:.2} dB  psnr(common) {:.2} dB",
                r.mipmap_hole_fraction, r.mipmap_psnr_filled, r.mipmap_psnr_common
            );
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("input.png"), encode_rgb8(&img)?)?;
                std::fs::write(dir.join("naive.png"), encode_rgb8(&r.naive)?)?;
                std::fs::write(dir.join("mipmap.png"), encode_rgb8(&r.mipmap)?)?;
                std::fs::write(dir.join("report.json"), serde_json::to_vec_pretty(&r)?)?;
                println!("wrote {}", dir.display());
            }
        }
    }
    Ok(())
}
