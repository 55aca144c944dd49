//! Exact model counting with the BDD engine: threshold functions and the
//! Boolean image of a median network.
//!
//! ```bash
//! cargo run --example bdd_counting
//! ```

use approx_median::analysis::network_bdds;
use approx_median::bdd::BddManager;
use approx_median::network::{gen_mom, known};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut m = BddManager::new(9);
    let majority = m.threshold(5);
    println!("at least 5 of 9 ones: {} assignments, {} nodes", m.satcount(majority)?, m.size(majority)?);

    let exact = network_bdds(&mut m, &known::median9())?[0];
    println!("exact 9-median is the majority function: {}", exact == majority);

    let mom = network_bdds(&mut m, &gen_mom(9)?)?[0];
    let not_majority = m.not(majority)?;
    let false_high = m.and(mom, not_majority)?;
    println!(
        "median of medians outputs 1 on {} of 512 inputs, {} of them with fewer than 5 ones",
        m.satcount(mom)?,
        m.satcount(false_high)?
    );

    let x1 = m.var(1)?;
    let x2 = m.var(2)?;
    let f = m.and(x1, x2)?;
    print!("{}", m.to_dot(f)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
