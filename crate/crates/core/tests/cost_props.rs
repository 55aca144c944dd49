mod common;

use approx_median::cost::{cost, emit_rtl, CostReport, TechConfig};
use approx_median::network::{known, Network};
use common::{longest_path, random_network};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Registers counted boundary by boundary.
fn registers_by_boundary(net: &Network) -> usize {
    let mut stage = vec![0usize; net.signal_count()];
    for (k, op) in net.ops().iter().enumerate() {
        let st = 1 + stage[op.a].max(stage[op.b]);
        stage[net.min_signal(k)] = st;
        stage[net.max_signal(k)] = st;
    }
    let op_stage: Vec<usize> = (0..net.k()).map(|k| stage[net.min_signal(k)]).collect();
    let depth = op_stage.iter().copied().max().unwrap_or(0);
    let mut total = 0;
    for b in 1..depth {
        for s in 0..net.signal_count() {
            let produced = stage[s] <= b;
            let consumed_later = net
                .ops()
                .iter()
                .enumerate()
                .any(|(k, op)| (op.a == s || op.b == s) && op_stage[k] > b);
            if produced && consumed_later {
                total += 1;
            }
        }
    }
    total
}

fn net_strategy() -> impl Strategy<Value = Network> {
    (prop_oneof![Just(3usize), Just(5), Just(9), Just(13)], 0usize..50, any::<u64>())
        .prop_map(|(n, k, seed)| random_network(n, k, &mut ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #[test]
    fn structure_matches_independent_counts(net in net_strategy()) {
        let tech = TechConfig::default();
        let report = cost(&net, &tech);
        prop_assert_eq!(report.active(), net.prune().k());
        prop_assert_eq!(report.depth, longest_path(&net));
        prop_assert_eq!(report.n_r, registers_by_boundary(&net.prune()));
        let rtl = emit_rtl(&net, &tech, "dut");
        prop_assert_eq!(rtl.matches("-- reg").count(), report.n_r);
        prop_assert_eq!(report.area, CostReport::area_for(&tech, report.n_a, report.n_p, report.n_r));
    }

    #[test]
    fn deleting_a_cas_never_increases_cost(net in net_strategy(), seed in any::<u64>()) {
        prop_assume!(net.k() > 0);
        let tech = TechConfig::default();
        let op = ChaCha8Rng::seed_from_u64(seed).gen_range(0..net.k());
        prop_assert!(cost(&net.without_cas(op), &tech).area <= cost(&net, &tech).area);
    }
}

#[test]
fn nine_median_counts() {
    let report = cost(&known::median9(), &TechConfig::default());
    assert_eq!(report.active(), 19);
    assert_eq!(cost(&Network::identity(9).unwrap().with_outputs(vec![4]).unwrap(), &TechConfig::default()).area, 0.0);
}

#[test]
fn tech_file_parsing() {
    let tech: TechConfig = "# 45nm-ish\na_mx = 10\nw=16\n".parse().unwrap();
    assert_eq!(tech.a_mx, 10.0);
    assert_eq!(tech.width, 16);
    assert_eq!(tech.a_cmp, TechConfig::default().a_cmp);
    assert!("a_reg = -1".parse::<TechConfig>().is_err());
    assert!("bogus = 1".parse::<TechConfig>().is_err());
    assert_eq!(tech.to_text().parse::<TechConfig>().unwrap(), tech);
}
