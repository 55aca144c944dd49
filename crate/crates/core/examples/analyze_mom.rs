//! Rank-error profile of the median-of-medians networks for 3x3 and 5x5
//! windows, next to the exact minimal networks.
//!
//! ```bash
//! cargo run --release --example analyze_mom
//! ```

use approx_median::analysis::analyze;
use approx_median::network::{gen_mom, known};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for (name, net) in [
        ("exact 9-median", known::median9()),
        ("MoM 9", gen_mom(9)?),
        ("exact 25-median", known::median25()),
        ("MoM 25", gen_mom(25)?),
    ] {
        let start = std::time::Instant::now();
        let profile = analyze(&net)?;
        println!("== {name} ({:.1?})", start.elapsed());
        print!("{}", profile.render_text());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
