//! Area estimates for exact and approximate medians under the default and a
//! custom technology description.
//!
//! ```bash
//! cargo run --example cost_report
//! ```

use approx_median::cost::{asap_schedule, classify_nodes, cost, TechConfig};
use approx_median::network::{gen_exact_median, gen_mom, known};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let default = TechConfig::default();
    let wide: TechConfig = "a_mx = 36\na_cmp = 75\na_reg = 44\nwidth = 16\n".parse()?;
    println!("{:<18} {:>4} {:>4} {:>4} {:>4} {:>6} {:>9} {:>9}", "network", "k", "n_A", "n_P", "n_R", "depth", "C", "C (w=16)");
    for (name, net) in [
        ("exact 9 (19 CAS)", known::median9()),
        ("Batcher 9", gen_exact_median(9)?),
        ("MoM 9", gen_mom(9)?),
        ("exact 25", known::median25()),
        ("MoM 25", gen_mom(25)?),
    ] {
        let r = cost(&net, &default);
        println!(
            "{name:<18} {:>4} {:>4} {:>4} {:>4} {:>6} {:>9.1} {:>9.1}",
            net.prune().k(),
            r.n_a,
            r.n_p,
            r.n_r,
            r.depth,
            r.area,
            cost(&net, &wide).area
        );
    }

    let m9 = known::median9();
    let classes = classify_nodes(&m9);
    let schedule = asap_schedule(&m9);
    println!("\n19-CAS 9-median: {} full and {} partial CAS, stages {:?}", classes.both, classes.partial, schedule.stages);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
