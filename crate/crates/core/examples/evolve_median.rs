//! Two-stage search for an approximate 9-input median at the area of a
//! 14-CAS network, starting from the 19-CAS exact median.
//!
//! ```bash
//! cargo run --release --example evolve_median -- [seed] [evaluations]
//! ```

use approx_median::cost::TechConfig;
use approx_median::network::known;
use approx_median::search::{evolve, Budget, SearchConfig};

pub fn run_example(seed: u64, evaluations: u64) -> Result<(), Box<dyn std::error::Error>> {
    let tech = TechConfig::default();
    let initial = known::median9();
    let target = SearchConfig::target_for_cas(&initial, 14, &tech);
    let mut cfg = SearchConfig::new(initial, target, tech);
    cfg.seed = seed;
    cfg.budget = Budget::Evaluations(evaluations);

    let start = std::time::Instant::now();
    let result = evolve(&cfg)?;
    println!(
        "target C = {:.1} +- {:.1}; {} evaluations in {:.1?}; stage 2 from generation {:?}",
        cfg.target,
        cfg.eps,
        result.evaluations,
        start.elapsed(),
        result.refine_from
    );
    println!("best (C = {:.1}, k = {}):", result.best.cost.area, result.best.cost.active());
    print!("{}", result.best.profile.render_text());
    println!("\nPareto archive:\n{}", result.archive.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let evaluations = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100_000);
    run_example(seed, evaluations)
}
