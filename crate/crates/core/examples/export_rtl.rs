//! Pipelined VHDL for the 3-input median, printed to stdout.
//!
//! ```bash
//! cargo run --example export_rtl > median3.vhd
//! ```

use approx_median::cost::{cost, emit_rtl, TechConfig};
use approx_median::network::known;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let tech = TechConfig::default();
    let net = known::median3();
    let rtl = emit_rtl(&net, &tech, "median3");
    print!("{rtl}");
    eprintln!("-- {} registers, depth {}", cost(&net, &tech).n_r, cost(&net, &tech).depth);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
