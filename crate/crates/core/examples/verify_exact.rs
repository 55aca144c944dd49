//! Certifies exact median networks and reports the worst-case rank error of
//! approximate ones, including networks with single comparators removed.
//!
//! ```bash
//! cargo run --release --example verify_exact
//! ```

use approx_median::analysis::{analyze, is_exact};
use approx_median::network::{gen_exact_median, gen_mom, known};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for n in [3, 5, 7, 9, 25, 49] {
        let net = gen_exact_median(n)?;
        println!("Batcher median {n:>2} ({:>3} CAS): exact = {}", net.k(), is_exact(&net)?);
    }
    for n in [9, 25] {
        let p = analyze(&gen_mom(n)?)?;
        println!("MoM {n}: worst case {}/{} ranks", p.d_left, p.d_right);
    }

    let m9 = known::median9();
    println!("\nremoving one CAS from the 19-CAS 9-median:");
    for op in 0..m9.k() {
        let p = analyze(&m9.without_cas(op))?;
        println!("  without #{op:>2}: k = {:>2}, d = {}/{}, Q = {:.3}", p.k, p.d_left, p.d_right, p.quality_f64());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
