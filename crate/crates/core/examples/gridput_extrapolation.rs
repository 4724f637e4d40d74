//! Splats a sparse random subset of an image into a grid with and without
//! mipmap extrapolation and compares the holes left behind.
//!
//! cargo run --release --example gridput_extrapolation -- [keep_fraction]

use texsynth::experiments::{sparse_reconstruction, synthetic_photo};
use texsynth::image_buf::encode_rgb8;

fn main() -> anyhow::Result<()> {
    let keep: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let photo = synthetic_photo(512, 7);
    println!("{:>6} {:>8} {:>12} {:>12}", "levels", "holes", "psnr(filled)", "psnr(common)");
    let naive = sparse_reconstruction(&photo, keep, 1, 7)?;
    println!("{:>6} {:>8.4} {:>12.2} {:>12.2}", "naive", naive.naive_hole_fraction, naive.naive_psnr_filled, naive.naive_psnr_common);
    for levels in 1..=6 {
        let r = sparse_reconstruction(&photo, keep, levels, 7)?;
        println!(
            "{levels:>6} {:>8.4} {:>12.2} {:>12.2}",
            r.mipmap_hole_fraction, r.mipmap_psnr_filled, r.mipmap_psnr_common
        );
        if levels == 4 {
            std::fs::create_dir_all("out/gridput")?;
            std::fs::write("out/gridput/naive.png", encode_rgb8(&r.naive)?)?;
            std::fs::write("out/gridput/mipmap.png", encode_rgb8(&r.mipmap)?)?;
        }
    }
    Ok(())
}
