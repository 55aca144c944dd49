//! Cross-checks the BDD analysis against brute-force enumeration over all
//! permutations and over all Boolean input vectors.
//!
//! ```bash
//! cargo run --release --example oracle_check
//! ```

use std::time::Instant;

use approx_median::analysis::{analyze, binary_profile, perm_profile};
use approx_median::network::{gen_mom, Network};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // an ad-hoc 7-input approximation: median of (median3, median3, x6)
    let seven: Network = "n 7\ncas 0 1\ncas 7 2\ncas 8 10\ncas 3 4\ncas 13 5\ncas 14 16\ncas 11 17\ncas 19 6\ncas 20 22\nout 23\n".parse()?;
    for (name, net) in [("7-input ad hoc", seven), ("MoM 9", gen_mom(9)?)] {
        let t = Instant::now();
        let bdd = analyze(&net)?;
        let t_bdd = t.elapsed();
        let t = Instant::now();
        let perm = perm_profile(&net)?;
        let t_perm = t.elapsed();
        let binary = binary_profile(&net)?;
        println!(
            "{name}: Q = {} (BDD {t_bdd:.1?}, {}! permutations {t_perm:.1?}); oracles agree: {}",
            bdd.quality,
            net.n(),
            perm == bdd && binary == bdd
        );
    }

    let mom25 = gen_mom(25)?;
    let t = Instant::now();
    let bdd = analyze(&mom25)?;
    let t_bdd = t.elapsed();
    let t = Instant::now();
    let binary = binary_profile(&mom25)?;
    println!(
        "MoM 25: BDD {t_bdd:.1?}, 2^25 vectors {:.1?}, agree: {}",
        t.elapsed(),
        binary == bdd
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
