//! Salt-and-pepper denoising of the procedural test scenes with exact and
//! approximate 3x3 median networks, scored by SSIM. Pass a directory to
//! also write the images as PGM.
//!
//! ```bash
//! cargo run --release --example denoise_image -- [out_dir]
//! ```

use std::path::Path;

use approx_median::imaging::{add_salt_pepper, median_filter, scenes, ssim, write_pgm, Window};
use approx_median::network::{gen_mom, known};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example(size: usize, out_dir: Option<&Path>) -> Result<(), Box<dyn std::error::Error>> {
    let exact = known::median9();
    let mom = gen_mom(9)?;
    println!("{:<14} {:>5} {:>8} {:>8} {:>8}", "scene", "p", "noisy", "exact", "MoM");
    for (i, (name, clean)) in scenes::all(size).into_iter().enumerate() {
        for p in [0.01, 0.05, 0.10, 0.20] {
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let noisy = add_salt_pepper(&clean, p, &mut rng)?;
            let a = median_filter(&noisy, &exact, Window::Three)?;
            let b = median_filter(&noisy, &mom, Window::Three)?;
            println!(
                "{name:<14} {p:>5.2} {:>8.4} {:>8.4} {:>8.4}",
                ssim(&clean, &noisy)?,
                ssim(&clean, &a)?,
                ssim(&clean, &b)?
            );
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(dir)?;
                let tag = format!("{name}_{:02}", (p * 100.0).round());
                std::fs::write(dir.join(format!("{name}.pgm")), write_pgm(&clean))?;
                std::fs::write(dir.join(format!("{tag}_noisy.pgm")), write_pgm(&noisy))?;
                std::fs::write(dir.join(format!("{tag}_exact.pgm")), write_pgm(&a))?;
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1);
    run_example(256, dir.as_deref().map(Path::new))
}
