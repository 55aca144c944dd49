//! Exact rank-error analysis of single-output comparison networks.
//!
//! By the zero-one principle a network is analysed over Boolean inputs. For
//! every level `c` (number of ones in the input) the virtual circuit counts
//! the vectors on which the network output is 0 or 1; those counts determine
//! the exact distribution of the rank of the returned element under uniformly
//! random distinct inputs.
//!
//! With `n = 2m - 1` inputs:
//!
//! * `a_right[i]` counts vectors with `m - i` ones on which the output is 1,
//! * `a_left[i]` counts vectors with `m - 1 + i` ones on which the output is 0,
//!
//! for `i = 0..m`. The histogram `H[r - 1]` is the probability that the
//! output has rank `r` (1 = smallest), so `H[m - 1]` is `h0`.

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::bdd::{BddError, BddManager, BddRef};
use crate::network::{gen_batcher_sorter, MedianSpec, Network, NetworkError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Bdd(#[from] BddError),
    #[error("expected a single-output network, found {0} outputs")]
    NotSingleOutput(usize),
    #[error("input count mismatch: network has {network}, sorter has {sorter}")]
    SorterMismatch { network: usize, sorter: usize },
    #[error("sorter output {0} is not the expected threshold function")]
    UncertifiedSorter(usize),
    #[error("left and right centre probabilities disagree; not a selection network")]
    Inconsistent,
    #[error("{what} needs n <= {limit}, got {n}")]
    TooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
    },
    #[error("histogram has {got} bins, expected {expected}")]
    HistogramLength { expected: usize, got: usize },
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;

/// Network, sorter and derived level indicators sharing one BDD manager.
pub struct VirtualCircuit {
    manager: BddManager,
    spec: MedianSpec,
    output: BddRef,
    sorted: Vec<BddRef>,
    levels: Vec<BddRef>,
    q_left: Vec<BddRef>,
    q_right: Vec<BddRef>,
}

/// BDDs for every output of `net`, CAS mapped to (AND, OR).
pub fn network_bdds(manager: &mut BddManager, net: &Network) -> Result<Vec<BddRef>> {
    let net = net.prune();
    let mut signals = Vec::with_capacity(net.signal_count());
    for i in 1..=net.n() {
        signals.push(manager.var(i)?);
    }
    for op in net.ops() {
        let (a, b) = (signals[op.a], signals[op.b]);
        let lo = manager.and(a, b)?;
        let hi = manager.or(a, b)?;
        signals.push(lo);
        signals.push(hi);
    }
    Ok(net.outputs().iter().map(|&s| signals[s]).collect())
}

fn single_output(net: &Network) -> Result<()> {
    match net.outputs().len() {
        1 => Ok(()),
        k => Err(AnalysisError::NotSingleOutput(k)),
    }
}

pub fn build_virtual_circuit(net: &Network, sorter: &Network) -> Result<VirtualCircuit> {
    single_output(net)?;
    let spec = MedianSpec::new(net.n())?;
    let n = spec.n;
    if sorter.n() != n || sorter.outputs().len() != n {
        return Err(AnalysisError::SorterMismatch {
            network: n,
            sorter: sorter.n(),
        });
    }
    let mut manager = BddManager::new(n);
    let output = network_bdds(&mut manager, net)?[0];
    let sorted = network_bdds(&mut manager, sorter)?;

    // y_j (1-based, ascending) is 1 iff at least n - j + 1 inputs are 1.
    for (j, &y) in sorted.iter().enumerate() {
        if manager.threshold(n - j) != y {
            return Err(AnalysisError::UncertifiedSorter(j + 1));
        }
    }

    // E_c = y_{n-c+1} & !y_{n-c}, with y_0 = FALSE and y_{n+1} = TRUE
    let y = |j: usize, m: &BddManager| -> BddRef {
        match j {
            0 => m.fals(),
            j if j == n + 1 => m.tru(),
            j => sorted[j - 1],
        }
    };
    let mut levels = Vec::with_capacity(n + 1);
    for c in 0..=n {
        let upper = y(n - c + 1, &manager);
        let lower = y(n - c, &manager);
        let not_lower = manager.not(lower)?;
        levels.push(manager.and(upper, not_lower)?);
    }

    let not_output = manager.not(output)?;
    let mut q_left = Vec::with_capacity(spec.m);
    let mut q_right = Vec::with_capacity(spec.m);
    for i in 0..spec.m {
        q_right.push(manager.and(output, levels[spec.m - i])?);
        q_left.push(manager.and(not_output, levels[spec.m - 1 + i])?);
    }

    Ok(VirtualCircuit {
        manager,
        spec,
        output,
        sorted,
        levels,
        q_left,
        q_right,
    })
}

impl VirtualCircuit {
    pub fn spec(&self) -> MedianSpec {
        self.spec
    }

    pub fn manager(&self) -> &BddManager {
        &self.manager
    }

    pub fn output(&self) -> BddRef {
        self.output
    }

    /// Sorter outputs in ascending order.
    pub fn sorted(&self) -> &[BddRef] {
        &self.sorted
    }

    /// `E_c` for `c = 0..=n`: exactly `c` inputs are 1.
    pub fn levels(&self) -> &[BddRef] {
        &self.levels
    }

    pub fn q_left(&self) -> &[BddRef] {
        &self.q_left
    }

    pub fn q_right(&self) -> &[BddRef] {
        &self.q_right
    }

    /// `(a_left, a_right)` by model counting.
    pub fn counts(&self) -> Result<(Vec<BigUint>, Vec<BigUint>)> {
        let count = |fs: &[BddRef]| -> Result<Vec<BigUint>> {
            fs.iter()
                .map(|&f| self.manager.satcount(f).map_err(Into::into))
                .collect()
        };
        Ok((count(&self.q_left)?, count(&self.q_right)?))
    }

    /// Canonical comparison against the majority threshold.
    pub fn is_exact(&self) -> bool {
        self.sorted[self.spec.m - 1] == self.output
    }
}

/// Error counts through the BDD virtual circuit.
pub fn error_counts(net: &Network) -> Result<(Vec<BigUint>, Vec<BigUint>)> {
    let sorter = gen_batcher_sorter(net.n())?;
    build_virtual_circuit(net, &sorter)?.counts()
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

fn ratio(num: &BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den))
}

/// Rank histogram from the level counts, ordered from rank 1 to rank `n`.
pub fn histogram(a_left: &[BigUint], a_right: &[BigUint], n: usize) -> Result<Vec<BigRational>> {
    let spec = MedianSpec::new(n)?;
    let m = spec.m;
    for side in [a_left, a_right] {
        if side.len() != m {
            return Err(AnalysisError::HistogramLength {
                expected: m,
                got: side.len(),
            });
        }
    }
    // Fraction of level vectors returning 1 (right) or 0 (left): the
    // probability that the output rank is at least m + i (at most m - i).
    let right_tail: Vec<BigRational> = (0..m)
        .map(|i| ratio(&a_right[i], binomial(n, m - i)))
        .collect();
    let left_tail: Vec<BigRational> = (0..m)
        .map(|i| ratio(&a_left[i], binomial(n, m - 1 + i)))
        .collect();
    let diff = |tail: &[BigRational], i: usize| -> BigRational {
        if i + 1 < m {
            &tail[i] - &tail[i + 1]
        } else {
            tail[i].clone()
        }
    };
    let h_right: Vec<BigRational> = (0..m).map(|i| diff(&right_tail, i)).collect();
    let h_left: Vec<BigRational> = (0..m).map(|i| diff(&left_tail, i)).collect();
    if h_left[0] != h_right[0] {
        return Err(AnalysisError::Inconsistent);
    }
    let mut hist: Vec<BigRational> = h_left[1..].iter().rev().cloned().collect();
    hist.push(h_right[0].clone());
    hist.extend(h_right[1..].iter().cloned());
    Ok(hist)
}

/// Inverse of [`histogram`]: level counts recovered from a rank histogram.
pub fn counts_from_histogram(hist: &[BigRational], n: usize) -> Result<(Vec<BigUint>, Vec<BigUint>)> {
    let m = MedianSpec::new(n)?.m;
    if hist.len() != n {
        return Err(AnalysisError::HistogramLength {
            expected: n,
            got: hist.len(),
        });
    }
    let count = |tail: BigRational, den: BigUint| -> Result<BigUint> {
        let v = tail * BigRational::from_integer(BigInt::from(den));
        if !v.is_integer() || v.numer().sign() == num_bigint::Sign::Minus {
            return Err(AnalysisError::Inconsistent);
        }
        Ok(v.numer().magnitude().clone())
    };
    let mut a_right = Vec::with_capacity(m);
    let mut a_left = Vec::with_capacity(m);
    for i in 0..m {
        let right: BigRational = hist[m - 1 + i..].iter().sum();
        let left: BigRational = hist[..m - i].iter().sum();
        a_right.push(count(right, binomial(n, m - i))?);
        a_left.push(count(left, binomial(n, m - 1 + i))?);
    }
    Ok((a_left, a_right))
}

/// Largest distances with a nonzero error count on either side.
pub fn worst_case(a_left: &[BigUint], a_right: &[BigUint]) -> (usize, usize) {
    let worst = |a: &[BigUint]| {
        (1..a.len())
            .rev()
            .find(|&i| !a[i].is_zero())
            .unwrap_or(0)
    };
    (worst(a_left), worst(a_right))
}

/// Sum of squared rank distances weighted by the histogram.
pub fn quality(hist: &[BigRational], m: usize) -> Result<BigRational> {
    if m == 0 || hist.len() != 2 * m - 1 {
        return Err(AnalysisError::HistogramLength {
            expected: (2 * m).saturating_sub(1),
            got: hist.len(),
        });
    }
    Ok(hist
        .iter()
        .enumerate()
        .fold(BigRational::zero(), |acc, (r, h)| {
            let j = r as i64 - (m as i64 - 1);
            acc + h * BigRational::from_integer(BigInt::from(j * j))
        }))
}

/// True iff `net` computes the median of its inputs.
pub fn is_exact(net: &Network) -> Result<bool> {
    single_output(net)?;
    let spec = MedianSpec::new(net.n())?;
    let mut manager = BddManager::new(spec.n);
    let out = network_bdds(&mut manager, net)?[0];
    Ok(manager.threshold(spec.m) == out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorProfile {
    pub n: usize,
    pub m: usize,
    /// CAS count of the pruned network.
    pub k: usize,
    pub a_left: Vec<BigUint>,
    pub a_right: Vec<BigUint>,
    /// Probabilities of output ranks 1..=n.
    pub hist: Vec<BigRational>,
    pub d_left: usize,
    pub d_right: usize,
    pub h0: BigRational,
    pub quality: BigRational,
}

impl ErrorProfile {
    pub fn from_counts(n: usize, k: usize, a_left: Vec<BigUint>, a_right: Vec<BigUint>) -> Result<Self> {
        let m = MedianSpec::new(n)?.m;
        let hist = histogram(&a_left, &a_right, n)?;
        let (d_left, d_right) = worst_case(&a_left, &a_right);
        let quality = quality(&hist, m)?;
        Ok(ErrorProfile {
            n,
            m,
            k,
            h0: hist[m - 1].clone(),
            a_left,
            a_right,
            hist,
            d_left,
            d_right,
            quality,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.d_left == 0 && self.d_right == 0
    }

    pub fn quality_f64(&self) -> f64 {
        to_f64(&self.quality)
    }

    pub fn h0_f64(&self) -> f64 {
        to_f64(&self.h0)
    }

    pub fn hist_f64(&self) -> Vec<f64> {
        self.hist.iter().map(to_f64).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let json = ProfileJson {
            n: self.n,
            m: self.m,
            k: self.k,
            a_l: self.a_left.iter().map(|a| a.to_string()).collect(),
            a_r: self.a_right.iter().map(|a| a.to_string()).collect(),
            h: self.hist.iter().map(RationalJson::from).collect(),
            d_l: self.d_left,
            d_r: self.d_right,
            h0: RationalJson::from(&self.h0),
            q: RationalJson::from(&self.quality),
            exact: self.is_exact(),
        };
        serde_json::to_value(json).expect("profile serializes")
    }

    /// One row in the layout of a quality table: k, Q, dL, dR, h0, H.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n={} m={} k={}", self.n, self.m, self.k);
        let _ = writeln!(s, "Q   = {:.4} ({})", self.quality_f64(), self.quality);
        let _ = writeln!(s, "dL  = {}", self.d_left);
        let _ = writeln!(s, "dR  = {}", self.d_right);
        let _ = writeln!(s, "h0  = {:.4} ({})", self.h0_f64(), self.h0);
        let bins: Vec<String> = self.hist_f64().iter().map(|h| format!("{h:.2}")).collect();
        let _ = writeln!(s, "H   = ({})", bins.join(", "));
        if self.is_exact() {
            s.push_str("exact median\n");
        } else {
            let _ = writeln!(s, "approximate median (d = {}/{})", self.d_left, self.d_right);
        }
        s
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Serialize)]
struct RationalJson {
    num: String,
    den: String,
    value: f64,
}

impl From<&BigRational> for RationalJson {
    fn from(r: &BigRational) -> Self {
        RationalJson {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
            value: to_f64(r),
        }
    }
}

#[derive(Serialize)]
struct ProfileJson {
    n: usize,
    m: usize,
    k: usize,
    #[serde(rename = "aL")]
    a_l: Vec<String>,
    #[serde(rename = "aR")]
    a_r: Vec<String>,
    #[serde(rename = "H")]
    h: Vec<RationalJson>,
    #[serde(rename = "dL")]
    d_l: usize,
    #[serde(rename = "dR")]
    d_r: usize,
    h0: RationalJson,
    #[serde(rename = "Q")]
    q: RationalJson,
    exact: bool,
}

/// Full BDD-based analysis of a single-output network.
pub fn analyze(net: &Network) -> Result<ErrorProfile> {
    single_output(net)?;
    let (a_left, a_right) = error_counts(net)?;
    ErrorProfile::from_counts(net.n(), net.prune().k(), a_left, a_right)
}

pub const BINARY_ORACLE_LIMIT: usize = 30;
pub const PERM_ORACLE_LIMIT: usize = 10;

/// Counts by exhaustive simulation of all `2^n` Boolean vectors.
pub fn binary_oracle(net: &Network) -> Result<(Vec<BigUint>, Vec<BigUint>)> {
    single_output(net)?;
    let spec = MedianSpec::new(net.n())?;
    let n = spec.n;
    if n > BINARY_ORACLE_LIMIT {
        return Err(AnalysisError::TooLarge {
            what: "binary oracle",
            n,
            limit: BINARY_ORACLE_LIMIT,
        });
    }
    let net = net.prune();
    let lanes = crate::network::lane_words(n);
    let low_bits = n.min(6);
    let valid: u64 = if low_bits == 6 {
        u64::MAX
    } else {
        (1u64 << (1u32 << low_bits)) - 1
    };
    // lane masks grouped by the number of ones among the low variables
    let mut by_ones = [0u64; 7];
    for lane in 0..64u32 {
        if valid >> lane & 1 == 1 {
            by_ones[lane.count_ones() as usize] |= 1 << lane;
        }
    }
    let mut ones = vec![0u64; n + 1];
    let mut zeros = vec![0u64; n + 1];
    let mut scratch = Vec::new();
    for block in 0..1u64 << (n - low_bits) {
        let inputs = crate::network::block_inputs(n, block, &lanes);
        let out = net.evaluate_words(&inputs, &mut scratch)[0];
        let high = block.count_ones() as usize;
        for (j, &mask) in by_ones.iter().enumerate().take(low_bits + 1) {
            ones[high + j] += u64::from((out & mask).count_ones());
            zeros[high + j] += u64::from((!out & mask).count_ones());
        }
    }
    let m = spec.m;
    let a_right = (0..m).map(|i| BigUint::from(ones[m - i])).collect();
    let a_left = (0..m).map(|i| BigUint::from(zeros[m - 1 + i])).collect();
    Ok((a_left, a_right))
}

/// Profile computed from the permutation oracle alone.
pub fn perm_profile(net: &Network) -> Result<ErrorProfile> {
    let hist = perm_oracle(net)?;
    let (a_left, a_right) = counts_from_histogram(&hist, net.n())?;
    ErrorProfile::from_counts(net.n(), net.prune().k(), a_left, a_right)
}

/// Profile computed from the binary oracle alone.
pub fn binary_profile(net: &Network) -> Result<ErrorProfile> {
    let (a_left, a_right) = binary_oracle(net)?;
    ErrorProfile::from_counts(net.n(), net.prune().k(), a_left, a_right)
}

/// Rank histogram by evaluating all `n!` permutations of `1..=n`.
pub fn perm_oracle(net: &Network) -> Result<Vec<BigRational>> {
    single_output(net)?;
    let n = MedianSpec::new(net.n())?.n;
    if n > PERM_ORACLE_LIMIT {
        return Err(AnalysisError::TooLarge {
            what: "permutation oracle",
            n,
            limit: PERM_ORACLE_LIMIT,
        });
    }
    let net = net.prune();
    let out = net.outputs()[0];
    let mut tally = vec![0u64; n];
    let mut perm: Vec<usize> = (1..=n).collect();
    let mut values = vec![0usize; net.signal_count()];
    let mut run = |perm: &[usize]| {
        values[..n].copy_from_slice(perm);
        for (k, op) in net.ops().iter().enumerate() {
            let (x, y) = (values[op.a], values[op.b]);
            values[n + 2 * k] = x.min(y);
            values[n + 2 * k + 1] = x.max(y);
        }
        tally[values[out] - 1] += 1;
    };
    // Heap's algorithm
    let mut c = vec![0usize; n];
    run(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            run(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let total: BigInt = (1..=n).fold(BigInt::one(), |acc, v| acc * v);
    Ok(tally
        .into_iter()
        .map(|t| BigRational::new(BigInt::from(t), total.clone()))
        .collect())
}
