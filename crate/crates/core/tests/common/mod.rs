#![allow(dead_code)]

use approx_median::network::{Cas, Network};
use rand::Rng;

/// Random feed-forward network with `k` CAS and a random output signal,
/// pruned to the output's cone.
pub fn random_network<R: Rng>(n: usize, k: usize, rng: &mut R) -> Network {
    let mut ops = Vec::with_capacity(k);
    for j in 0..k {
        let limit = n + 2 * j;
        let a = rng.gen_range(0..limit);
        let mut b = rng.gen_range(0..limit);
        if b == a && limit > 1 {
            b = (a + 1) % limit;
        }
        ops.push(Cas::new(a, b));
    }
    // bias the output towards late signals so most networks are non-trivial
    let total = n + 2 * k;
    let out = if k > 0 && rng.gen_bool(0.8) {
        rng.gen_range(n + k..total)
    } else {
        rng.gen_range(0..total)
    };
    Network::new(n, ops, vec![out]).expect("valid by construction").prune()
}

/// Sorted copy.
pub fn sorted<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    let mut s = v.to_vec();
    s.sort();
    s
}

/// Longest chain of CAS from any input to the output.
pub fn longest_path(net: &Network) -> usize {
    fn depth(net: &Network, s: usize, memo: &mut Vec<Option<usize>>) -> usize {
        if let Some(d) = memo[s] {
            return d;
        }
        let d = match net.producer(s) {
            None => 0,
            Some(k) => {
                let op = net.ops()[k];
                1 + depth(net, op.a, memo).max(depth(net, op.b, memo))
            }
        };
        memo[s] = Some(d);
        d
    }
    let mut memo = vec![None; net.signal_count()];
    depth(net, net.outputs()[0], &mut memo)
}
