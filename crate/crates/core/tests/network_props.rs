mod common;

use approx_median::network::{gen_batcher_sorter, parse_network, Network};
use approx_median::search::{decode, encode, mutate, Genome};
use common::{random_network, sorted};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn net_strategy() -> impl Strategy<Value = Network> {
    (1usize..=12, 0usize..40, any::<u64>()).prop_map(|(n, k, seed)| {
        random_network(n, k, &mut ChaCha8Rng::seed_from_u64(seed))
    })
}

proptest! {
    #[test]
    fn output_is_one_of_the_inputs(net in net_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<u8> = (0..net.n()).map(|_| rng.gen_range(0..8)).collect();
        let y = net.evaluate(&x).unwrap()[0];
        prop_assert!(x.contains(&y));
    }

    #[test]
    fn monotone_in_every_input(net in net_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<u16> = (0..net.n()).map(|_| rng.gen_range(0..100)).collect();
        let bigger: Vec<u16> = x.iter().map(|&v| v + rng.gen_range(0..20)).collect();
        prop_assert!(net.evaluate(&x).unwrap()[0] <= net.evaluate(&bigger).unwrap()[0]);
    }

    #[test]
    fn prune_is_idempotent_and_preserves_function(net in net_strategy(), seed in any::<u64>()) {
        let pruned = net.prune();
        prop_assert_eq!(pruned.prune(), pruned.clone());
        prop_assert!(pruned.k() <= net.k());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<i32> = (0..net.n()).map(|_| rng.gen_range(-50..50)).collect();
        prop_assert_eq!(net.evaluate(&x).unwrap(), pruned.evaluate(&x).unwrap());
    }

    #[test]
    fn text_round_trip(net in net_strategy()) {
        prop_assert_eq!(parse_network(&net.to_text()).unwrap(), net);
    }

    #[test]
    fn batcher_sorts(n in 1usize..=20, seed in any::<u64>()) {
        let sorter = gen_batcher_sorter(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<u32> = (0..n).map(|_| rng.gen_range(0..1000)).collect();
        prop_assert_eq!(sorter.evaluate(&x).unwrap(), sorted(&x));
    }

    #[test]
    fn decode_matches_genome_semantics(net in net_strategy(), seed in any::<u64>()) {
        prop_assume!(net.n() >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = encode(&net, net.k() + 5, &mut rng).unwrap();
        let x: Vec<u8> = (0..net.n()).map(|_| rng.gen()).collect();
        prop_assert_eq!(decode(&g).evaluate(&x).unwrap(), net.evaluate(&x).unwrap());
    }
}

fn revalidate(g: &Genome) -> bool {
    Genome::new(g.n(), g.nodes().to_vec(), g.out()).is_ok()
}

#[test]
fn mutation_fuzz_keeps_genomes_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let seed_net = approx_median::network::known::median9();
    let mut g = encode(&seed_net, 38, &mut rng).unwrap();
    for step in 0..100_000u32 {
        let h = rng.gen_range(1..=4);
        let child = mutate(&g, h, &mut rng);
        assert!(revalidate(&child), "invalid genome at step {step}");
        assert_eq!(child.capacity(), g.capacity());
        let changed = g
            .nodes()
            .iter()
            .zip(child.nodes())
            .map(|(a, b)| {
                usize::from(a.in1 != b.in1) + usize::from(a.in2 != b.in2) + usize::from(a.func != b.func)
            })
            .sum::<usize>()
            + usize::from(g.out() != child.out());
        assert_eq!(changed, h, "step {step}: {changed} genes changed for h = {h}");
        let net = decode(&child);
        assert!(net.k() <= child.capacity());
        assert_eq!(net.outputs().len(), 1);
        g = child;
    }
}
