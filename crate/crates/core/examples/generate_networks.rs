//! Generated networks: Batcher sorters, pruned exact medians and
//! median-of-medians, with their CAS counts and the text format.
//!
//! ```bash
//! cargo run --example generate_networks
//! ```

use approx_median::network::{gen_batcher_sorter, gen_exact_median, gen_mom, known, parse_network};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>3} {:>8} {:>8} {:>6} {:>6}", "n", "sorter", "median", "mom", "known");
    for n in [3, 5, 7, 9, 15, 25, 49] {
        let sorter = gen_batcher_sorter(n)?;
        assert!(sorter.is_exact_sorter() || n > 24);
        let median = gen_exact_median(n)?;
        let mom = gen_mom(n).map(|m| m.k().to_string()).unwrap_or_else(|_| "-".into());
        let minimal = known::minimal_median(n).map(|m| m.k().to_string()).unwrap_or_else(|| "-".into());
        println!("{n:>3} {:>8} {:>8} {mom:>6} {minimal:>6}", sorter.k(), median.k());
    }

    // wire-style input: `swap i j` leaves the smaller value on wire i
    let three = parse_network("n 3\nswap 0 1\nswap 1 2\nswap 0 1\nout 1\n")?;
    println!("\n3-median in canonical form:\n{}", three.to_text());
    println!("median of (7, 1, 4) = {}", three.evaluate(&[7, 1, 4])?[0]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
