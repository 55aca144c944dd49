//! Comparison networks as a feed-forward signal DAG.
//!
//! Signals `0..n` are the primary inputs. The `k`-th compare-and-swap (CAS)
//! element consumes two earlier signals and defines two new ones: its minimum
//! at `n + 2k` and its maximum at `n + 2k + 1`.

use std::fmt::{self, Write as _};

use thiserror::Error;

/// Identifier of a signal in a [`Network`].
pub type Signal = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: undefined signal {signal}")]
    UndefinedSignal { line: usize, signal: Signal },
    #[error("missing output declaration")]
    MissingOutput,
    #[error("input count must be positive")]
    NonPositiveInputs,
    #[error("signal {signal} referenced by {context} is not defined")]
    Undefined { signal: Signal, context: String },
    #[error("expected {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("median networks need an odd input count, got {0}")]
    EvenInputs(usize),
    #[error("unsupported input count {0}")]
    Unsupported(usize),
}

/// A single compare-and-swap element: `min(a, b)` and `max(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cas {
    pub a: Signal,
    pub b: Signal,
}

impl Cas {
    pub fn new(a: Signal, b: Signal) -> Self {
        Cas { a, b }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Network {
    n: usize,
    ops: Vec<Cas>,
    outputs: Vec<Signal>,
}

/// Median rank bookkeeping for an odd input count `n = 2m - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MedianSpec {
    pub n: usize,
    pub m: usize,
}

impl MedianSpec {
    pub fn new(n: usize) -> Result<Self, NetworkError> {
        if n == 0 {
            return Err(NetworkError::NonPositiveInputs);
        }
        if n.is_multiple_of(2) {
            return Err(NetworkError::EvenInputs(n));
        }
        Ok(MedianSpec { n, m: n.div_ceil(2) })
    }
}

impl Network {
    /// Builds a network, checking that every reference points backwards.
    pub fn new(n: usize, ops: Vec<Cas>, outputs: Vec<Signal>) -> Result<Self, NetworkError> {
        if n == 0 {
            return Err(NetworkError::NonPositiveInputs);
        }
        for (k, op) in ops.iter().enumerate() {
            let defined = n + 2 * k;
            for s in [op.a, op.b] {
                if s >= defined {
                    return Err(NetworkError::Undefined {
                        signal: s,
                        context: format!("cas {k}"),
                    });
                }
            }
        }
        if outputs.is_empty() {
            return Err(NetworkError::MissingOutput);
        }
        let total = n + 2 * ops.len();
        for &s in &outputs {
            if s >= total {
                return Err(NetworkError::Undefined {
                    signal: s,
                    context: "output".into(),
                });
            }
        }
        Ok(Network { n, ops, outputs })
    }

    /// The identity network on `n` wires.
    pub fn identity(n: usize) -> Result<Self, NetworkError> {
        Network::new(n, Vec::new(), (0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[Cas] {
        &self.ops
    }

    pub fn outputs(&self) -> &[Signal] {
        &self.outputs
    }

    /// Number of CAS elements.
    pub fn k(&self) -> usize {
        self.ops.len()
    }

    pub fn signal_count(&self) -> usize {
        self.n + 2 * self.ops.len()
    }

    pub fn min_signal(&self, op: usize) -> Signal {
        self.n + 2 * op
    }

    pub fn max_signal(&self, op: usize) -> Signal {
        self.n + 2 * op + 1
    }

    /// Index of the CAS producing `s`, or `None` for a primary input.
    pub fn producer(&self, s: Signal) -> Option<usize> {
        (s >= self.n).then(|| (s - self.n) / 2)
    }

    /// Same network with different outputs.
    pub fn with_outputs(&self, outputs: Vec<Signal>) -> Result<Self, NetworkError> {
        Network::new(self.n, self.ops.clone(), outputs)
    }

    /// The single output of a median-style network.
    pub fn single_output(&self) -> Option<Signal> {
        match self.outputs.as_slice() {
            [s] => Some(*s),
            _ => None,
        }
    }

    /// Values of every signal for the given inputs.
    pub fn signal_values<T: Ord + Copy>(&self, inputs: &[T]) -> Result<Vec<T>, NetworkError> {
        if inputs.len() != self.n {
            return Err(NetworkError::Arity {
                expected: self.n,
                got: inputs.len(),
            });
        }
        let mut values = Vec::with_capacity(self.signal_count());
        values.extend_from_slice(inputs);
        for op in &self.ops {
            let (x, y) = (values[op.a], values[op.b]);
            values.push(x.min(y));
            values.push(x.max(y));
        }
        Ok(values)
    }

    /// Runs the network on totally ordered values and returns the outputs.
    pub fn evaluate<T: Ord + Copy>(&self, inputs: &[T]) -> Result<Vec<T>, NetworkError> {
        let values = self.signal_values(inputs)?;
        Ok(self.outputs.iter().map(|&s| values[s]).collect())
    }

    /// Bit-parallel Boolean evaluation: each bit lane is an independent
    /// input vector, min is AND and max is OR.
    pub fn evaluate_words(&self, inputs: &[u64], scratch: &mut Vec<u64>) -> Vec<u64> {
        debug_assert_eq!(inputs.len(), self.n);
        scratch.clear();
        scratch.extend_from_slice(inputs);
        for op in &self.ops {
            let (x, y) = (scratch[op.a], scratch[op.b]);
            scratch.push(x & y);
            scratch.push(x | y);
        }
        self.outputs.iter().map(|&s| scratch[s]).collect()
    }

    /// Marks CAS elements from which some output is reachable.
    pub fn active_ops(&self) -> Vec<bool> {
        let mut live = vec![false; self.signal_count()];
        for &s in &self.outputs {
            live[s] = true;
        }
        let mut active = vec![false; self.ops.len()];
        for (k, op) in self.ops.iter().enumerate().rev() {
            if live[self.min_signal(k)] || live[self.max_signal(k)] {
                active[k] = true;
                live[op.a] = true;
                live[op.b] = true;
            }
        }
        active
    }

    /// Removes every CAS outside the cone of influence of the outputs.
    pub fn prune(&self) -> Network {
        let active = self.active_ops();
        let mut remap: Vec<Signal> = (0..self.n).collect();
        remap.resize(self.signal_count(), usize::MAX);
        let mut ops = Vec::new();
        for (k, op) in self.ops.iter().enumerate() {
            if !active[k] {
                continue;
            }
            let j = ops.len();
            ops.push(Cas::new(remap[op.a], remap[op.b]));
            remap[self.min_signal(k)] = self.n + 2 * j;
            remap[self.max_signal(k)] = self.n + 2 * j + 1;
        }
        let outputs = self.outputs.iter().map(|&s| remap[s]).collect();
        Network {
            n: self.n,
            ops,
            outputs,
        }
    }

    /// Replaces CAS `op` by two plain wires (its first output carries `a`,
    /// its second `b`) and prunes the result.
    pub fn without_cas(&self, op: usize) -> Network {
        let mut b = NetworkBuilder::new(self.n);
        let mut map: Vec<Signal> = (0..self.n).collect();
        for (k, cas) in self.ops.iter().enumerate() {
            let (x, y) = (map[cas.a], map[cas.b]);
            if k == op {
                map.extend([x, y]);
            } else {
                let (lo, hi) = b.cas(x, y);
                map.extend([lo, hi]);
            }
        }
        let outputs = self.outputs.iter().map(|&s| map[s]).collect();
        b.finish(outputs).expect("bypass keeps references backwards").prune()
    }

    /// Returns `true` if the network sorts every Boolean vector (and hence,
    /// by the zero-one principle, every input) into ascending output order.
    pub fn is_exact_sorter(&self) -> bool {
        if self.outputs.len() != self.n || self.n > 24 {
            return false;
        }
        let mut scratch = Vec::new();
        let lanes = lane_words(self.n);
        let blocks = 1u64 << self.n.saturating_sub(6);
        for block in 0..blocks {
            let inputs = block_inputs(self.n, block, &lanes);
            let out = self.evaluate_words(&inputs, &mut scratch);
            // ascending: an output can only be 1 if every later output is 1
            if out.windows(2).any(|w| w[0] & !w[1] != 0) {
                return false;
            }
        }
        true
    }

    /// Canonical text form (see [`parse_network`]).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n {}", self.n);
        for op in &self.ops {
            let _ = writeln!(s, "cas {} {}", op.a, op.b);
        }
        s.push_str("out");
        for o in &self.outputs {
            let _ = write!(s, " {o}");
        }
        s.push('\n');
        s
    }
}

impl std::str::FromStr for Network {
    type Err = NetworkError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_network(text)
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub fn serialize_network(net: &Network) -> String {
    net.to_text()
}

/// Lane patterns for the six lowest input variables of a 64-lane word.
pub(crate) fn lane_words(n: usize) -> Vec<u64> {
    (0..n.min(6))
        .map(|i| {
            (0..64u32).fold(0u64, |w, lane| {
                if lane >> i & 1 == 1 {
                    w | 1 << lane
                } else {
                    w
                }
            })
        })
        .collect()
}

/// Input words for block `block`: variables 0..6 vary across lanes, the
/// remaining ones are the bits of `block`.
pub(crate) fn block_inputs(n: usize, block: u64, lanes: &[u64]) -> Vec<u64> {
    (0..n)
        .map(|i| {
            if i < 6 {
                lanes[i]
            } else if block >> (i - 6) & 1 == 1 {
                u64::MAX
            } else {
                0
            }
        })
        .collect()
}

/// Incremental network construction over named signals.
#[derive(Clone, Debug)]
pub struct NetworkBuilder {
    n: usize,
    ops: Vec<Cas>,
}

impl NetworkBuilder {
    pub fn new(n: usize) -> Self {
        NetworkBuilder { n, ops: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Appends a CAS and returns its `(min, max)` signals.
    pub fn cas(&mut self, a: Signal, b: Signal) -> (Signal, Signal) {
        let k = self.ops.len();
        debug_assert!(a < self.n + 2 * k && b < self.n + 2 * k);
        self.ops.push(Cas::new(a, b));
        (self.n + 2 * k, self.n + 2 * k + 1)
    }

    /// Instantiates `sub` with its primary inputs bound to `inputs`; returns
    /// the signals bound to `sub`'s outputs.
    pub fn instantiate(&mut self, sub: &Network, inputs: &[Signal]) -> Vec<Signal> {
        assert_eq!(sub.n(), inputs.len(), "sub-network arity");
        let mut map: Vec<Signal> = inputs.to_vec();
        for op in sub.ops() {
            let (lo, hi) = self.cas(map[op.a], map[op.b]);
            map.push(lo);
            map.push(hi);
        }
        sub.outputs().iter().map(|&s| map[s]).collect()
    }

    pub fn finish(self, outputs: Vec<Signal>) -> Result<Network, NetworkError> {
        Network::new(self.n, self.ops, outputs)
    }
}

/// Wire-style construction: `swap(i, j)` leaves the minimum on wire `i` and
/// the maximum on wire `j`.
#[derive(Clone, Debug)]
pub struct WireBuilder {
    inner: NetworkBuilder,
    wires: Vec<Signal>,
}

impl WireBuilder {
    pub fn new(n: usize) -> Self {
        WireBuilder {
            inner: NetworkBuilder::new(n),
            wires: (0..n).collect(),
        }
    }

    pub fn swap(&mut self, i: usize, j: usize) {
        let (lo, hi) = self.inner.cas(self.wires[i], self.wires[j]);
        self.wires[i] = lo;
        self.wires[j] = hi;
    }

    pub fn wire(&self, i: usize) -> Signal {
        self.wires[i]
    }

    /// Finishes with every wire as an output, in wire order.
    pub fn finish_all(self) -> Result<Network, NetworkError> {
        let outputs = self.wires.clone();
        self.inner.finish(outputs)
    }

    pub fn finish_wires(self, wires: &[usize]) -> Result<Network, NetworkError> {
        let outputs = wires.iter().map(|&w| self.wires[w]).collect();
        self.inner.finish(outputs)
    }
}

/// Parses the line-oriented network format.
///
/// ```text
/// n 3
/// cas 0 1      # signals 3 (min) and 4 (max)
/// out 4
/// ```
///
/// Files using `swap i j` lines are in wire form: wire indices instead of
/// signal ids, and `out` (optional) names wires.
pub fn parse_network(text: &str) -> Result<Network, NetworkError> {
    enum Mode {
        Unknown,
        Signals(NetworkBuilder),
        Wires(WireBuilder),
    }

    let mut n: Option<usize> = None;
    let mut mode = Mode::Unknown;
    let mut outputs: Option<(usize, Vec<usize>)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        let keyword = parts.next().unwrap_or_default();
        let args: Vec<usize> = parts
            .map(|p| {
                p.parse::<usize>().map_err(|_| NetworkError::Parse {
                    line,
                    msg: format!("expected a non-negative integer, found `{p}`"),
                })
            })
            .collect::<Result<_, _>>()?;
        let parse_err = |msg: &str| NetworkError::Parse {
            line,
            msg: msg.to_string(),
        };
        if outputs.is_some() {
            return Err(parse_err("nothing may follow the `out` line"));
        }

        match keyword {
            "n" => {
                if n.is_some() {
                    return Err(parse_err("duplicate `n` line"));
                }
                match args.as_slice() {
                    [0] => return Err(NetworkError::NonPositiveInputs),
                    [v] => n = Some(*v),
                    _ => return Err(parse_err("`n` takes exactly one value")),
                }
            }
            "cas" | "swap" => {
                let inputs = n.ok_or_else(|| parse_err("`n` must come first"))?;
                let [a, b] = args[..] else {
                    return Err(parse_err("expected two operands"));
                };
                if keyword == "cas" {
                    if matches!(mode, Mode::Unknown) {
                        mode = Mode::Signals(NetworkBuilder::new(inputs));
                    }
                    let Mode::Signals(builder) = &mut mode else {
                        return Err(parse_err("cannot mix `cas` and `swap` lines"));
                    };
                    let defined = inputs + 2 * builder.ops.len();
                    for s in [a, b] {
                        if s >= defined {
                            return Err(NetworkError::UndefinedSignal { line, signal: s });
                        }
                    }
                    builder.cas(a, b);
                } else {
                    if matches!(mode, Mode::Unknown) {
                        mode = Mode::Wires(WireBuilder::new(inputs));
                    }
                    let Mode::Wires(builder) = &mut mode else {
                        return Err(parse_err("cannot mix `cas` and `swap` lines"));
                    };
                    if a >= inputs || b >= inputs || a == b {
                        return Err(parse_err("swap needs two distinct wires below n"));
                    }
                    builder.swap(a, b);
                }
            }
            "out" => {
                let inputs = n.ok_or_else(|| parse_err("`n` must come first"))?;
                if args.is_empty() {
                    return Err(parse_err("`out` needs at least one signal"));
                }
                match &mode {
                    Mode::Wires(_) => {
                        if let Some(&w) = args.iter().find(|&&w| w >= inputs) {
                            return Err(parse_err(&format!("wire {w} out of range")));
                        }
                    }
                    Mode::Signals(b) => {
                        let defined = inputs + 2 * b.ops.len();
                        if let Some(&s) = args.iter().find(|&&s| s >= defined) {
                            return Err(NetworkError::UndefinedSignal { line, signal: s });
                        }
                    }
                    Mode::Unknown => {
                        if let Some(&s) = args.iter().find(|&&s| s >= inputs) {
                            return Err(NetworkError::UndefinedSignal { line, signal: s });
                        }
                    }
                }
                outputs = Some((line, args));
            }
            other => return Err(parse_err(&format!("unknown keyword `{other}`"))),
        }
    }

    let n = n.ok_or(NetworkError::Parse {
        line: 0,
        msg: "missing `n` line".into(),
    })?;
    match mode {
        Mode::Wires(w) => match outputs {
            Some((_, wires)) => w.finish_wires(&wires),
            None => w.finish_all(),
        },
        Mode::Signals(b) => {
            let (_, outs) = outputs.ok_or(NetworkError::MissingOutput)?;
            b.finish(outs)
        }
        Mode::Unknown => {
            let (_, outs) = outputs.ok_or(NetworkError::MissingOutput)?;
            Network::new(n, Vec::new(), outs)
        }
    }
}

/// Batcher odd-even mergesort on `n` wires. Outputs are in ascending order.
pub fn gen_batcher_sorter(n: usize) -> Result<Network, NetworkError> {
    if n == 0 {
        return Err(NetworkError::NonPositiveInputs);
    }
    // Sort a power-of-two padding; padded wires hold +inf and never move, so
    // comparators touching them are dropped.
    let padded = n.next_power_of_two();
    let mut wires = WireBuilder::new(n);
    let mut p = 1;
    while p < padded {
        let mut k = p;
        while k >= 1 {
            let mut j = k % p;
            while j + k < padded {
                for i in 0..k.min(padded - j - k) {
                    let (x, y) = (i + j, i + j + k);
                    if x / (2 * p) == y / (2 * p) && y < n {
                        wires.swap(x, y);
                    }
                }
                j += 2 * k;
            }
            k /= 2;
        }
        p *= 2;
    }
    wires.finish_all()
}

/// Exact median: Batcher sorter pruned to its middle output.
pub fn gen_exact_median(n: usize) -> Result<Network, NetworkError> {
    let spec = MedianSpec::new(n)?;
    let sorter = gen_batcher_sorter(n)?;
    let mid = sorter.outputs()[spec.m - 1];
    Ok(sorter.with_outputs(vec![mid])?.prune())
}

/// Median of medians over consecutive groups: 3x3 for `n = 9`, 5x5 for
/// `n = 25`.
pub fn gen_mom(n: usize) -> Result<Network, NetworkError> {
    let group = match n {
        9 => known::median3(),
        25 => known::median5(),
        _ => return Err(NetworkError::Unsupported(n)),
    };
    let g = group.n();
    let mut b = NetworkBuilder::new(n);
    let inputs: Vec<Signal> = (0..n).collect();
    let mids: Vec<Signal> = inputs
        .chunks(g)
        .map(|chunk| b.instantiate(&group, chunk)[0])
        .collect();
    let out = b.instantiate(&group, &mids)[0];
    b.finish(vec![out])
}

/// Published minimal median networks shipped with the crate.
pub mod known {
    use super::{parse_network, Network};

    pub const MEDIAN3: &str = include_str!("../data/median3.net");
    pub const MEDIAN5: &str = include_str!("../data/median5.net");
    pub const MEDIAN9: &str = include_str!("../data/median9.net");
    pub const MEDIAN25: &str = include_str!("../data/median25.net");

    fn load(text: &str) -> Network {
        parse_network(text).expect("shipped network file is well formed")
    }

    /// 3 CAS.
    pub fn median3() -> Network {
        load(MEDIAN3)
    }

    /// 7 CAS.
    pub fn median5() -> Network {
        load(MEDIAN5)
    }

    /// 19 CAS.
    pub fn median9() -> Network {
        load(MEDIAN9)
    }

    /// 99 CAS.
    pub fn median25() -> Network {
        load(MEDIAN25)
    }

    /// Minimal network for `n` if one is shipped.
    pub fn minimal_median(n: usize) -> Option<Network> {
        match n {
            1 => Some(Network::new(1, Vec::new(), vec![0]).expect("identity")),
            3 => Some(median3()),
            5 => Some(median5()),
            9 => Some(median9()),
            25 => Some(median25()),
            _ => None,
        }
    }
}
