//! Cartesian genetic programming over comparison networks.
//!
//! A genome is a row of `n_c` two-input two-output nodes plus an output
//! gene. Node `j` owns signals `n + 2j` and `n + 2j + 1`, the same numbering
//! as [`Network`], so a network with at most `n_c` CAS encodes verbatim.
//! Function gene 0 is a CAS with outputs `(min, max)`; function gene 1 is a
//! CAS with the outputs exchanged, `(max, min)`.
//!
//! The search is a (1 + lambda) strategy in two stages. Stage 1 drives the
//! estimated area into the band `[t - eps, t + eps]`; stage 2 minimises the
//! quality metric inside the band and rejects everything outside it.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, AnalysisError, ErrorProfile};
use crate::cost::{cost, CostReport, TechConfig};
use crate::network::{Network, NetworkBuilder, NetworkError, Signal};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("network has {k} CAS but the genome holds only {capacity} nodes")]
    Capacity { k: usize, capacity: usize },
    #[error("genome: {0}")]
    Genome(String),
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SearchError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Gene {
    pub in1: Signal,
    pub in2: Signal,
    pub func: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Genome {
    n: usize,
    nodes: Vec<Gene>,
    out: Signal,
}

impl Genome {
    pub fn new(n: usize, nodes: Vec<Gene>, out: Signal) -> Result<Self> {
        for (j, g) in nodes.iter().enumerate() {
            let limit = n + 2 * j;
            if g.in1 >= limit || g.in2 >= limit {
                return Err(SearchError::Genome(format!("node {j} references a later signal")));
            }
            if g.func > 1 {
                return Err(SearchError::Genome(format!("node {j} has function {}", g.func)));
            }
        }
        if out >= n + 2 * nodes.len() {
            return Err(SearchError::Genome(format!("output gene {out} is undefined")));
        }
        Ok(Genome { n, nodes, out })
    }

    /// Parses the integer netlist form `(a,b,f)(a,b,f)...(out)`.
    pub fn parse_sequence(n: usize, text: &str) -> Result<Self> {
        let groups: Vec<Vec<usize>> = text
            .split('(')
            .map(|g| g.trim().trim_end_matches(')').trim())
            .filter(|g| !g.is_empty())
            .map(|g| {
                g.split(',')
                    .map(|v| {
                        v.trim()
                            .parse()
                            .map_err(|_| SearchError::Genome(format!("bad integer `{v}`")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let (last, body) = groups
            .split_last()
            .ok_or_else(|| SearchError::Genome("empty sequence".into()))?;
        let [out] = last[..] else {
            return Err(SearchError::Genome("last group must be the output gene".into()));
        };
        let nodes = body
            .iter()
            .map(|g| match g[..] {
                [in1, in2, func] => Ok(Gene {
                    in1,
                    in2,
                    func: func as u8,
                }),
                _ => Err(SearchError::Genome("node groups need three integers".into())),
            })
            .collect::<Result<_>>()?;
        Genome::new(n, nodes, out)
    }

    pub fn to_sequence(&self) -> String {
        let mut s = String::new();
        for g in &self.nodes {
            let _ = write!(s, "({},{},{})", g.in1, g.in2, g.func);
        }
        let _ = write!(s, "({})", self.out);
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Gene] {
        &self.nodes
    }

    pub fn out(&self) -> Signal {
        self.out
    }

    pub fn gene_count(&self) -> usize {
        3 * self.nodes.len() + 1
    }

    /// Nodes that influence the output.
    pub fn active_nodes(&self) -> Vec<bool> {
        let mut live = vec![false; self.n + 2 * self.nodes.len()];
        live[self.out] = true;
        let mut active = vec![false; self.nodes.len()];
        for (j, g) in self.nodes.iter().enumerate().rev() {
            if live[self.n + 2 * j] || live[self.n + 2 * j + 1] {
                active[j] = true;
                live[g.in1] = true;
                live[g.in2] = true;
            }
        }
        active
    }

    fn is_valid(&self) -> bool {
        Genome::new(self.n, self.nodes.clone(), self.out).is_ok()
    }
}

fn random_gene<R: Rng>(n: usize, j: usize, rng: &mut R) -> Gene {
    let limit = n + 2 * j;
    Gene {
        in1: rng.gen_range(0..limit),
        in2: rng.gen_range(0..limit),
        func: rng.gen_range(0..2),
    }
}

/// Encodes a single-output network; spare nodes get random genes.
pub fn encode<R: Rng>(net: &Network, capacity: usize, rng: &mut R) -> Result<Genome> {
    let out = net
        .single_output()
        .ok_or(AnalysisError::NotSingleOutput(net.outputs().len()))?;
    if net.k() > capacity {
        return Err(SearchError::Capacity {
            k: net.k(),
            capacity,
        });
    }
    let n = net.n();
    let mut nodes: Vec<Gene> = net
        .ops()
        .iter()
        .map(|op| Gene {
            in1: op.a,
            in2: op.b,
            func: 0,
        })
        .collect();
    for j in net.k()..capacity {
        nodes.push(random_gene(n, j, rng));
    }
    Genome::new(n, nodes, out)
}

/// The pruned network of active nodes.
pub fn decode(g: &Genome) -> Network {
    let active = g.active_nodes();
    let mut b = NetworkBuilder::new(g.n);
    let mut map: Vec<Signal> = (0..g.n).collect();
    for (j, gene) in g.nodes.iter().enumerate() {
        if !active[j] {
            map.extend([usize::MAX, usize::MAX]);
            continue;
        }
        let (lo, hi) = b.cas(map[gene.in1], map[gene.in2]);
        if gene.func == 0 {
            map.extend([lo, hi]);
        } else {
            map.extend([hi, lo]);
        }
    }
    b.finish(vec![map[g.out]])
        .expect("active genes only reference active signals")
        .prune()
}

/// Redraws `h` distinct gene positions from their legal domains, always
/// to a different value when the domain allows it.
pub fn mutate<R: Rng>(g: &Genome, h: usize, rng: &mut R) -> Genome {
    let mut child = g.clone();
    let total = g.gene_count();
    let n = g.n;
    let redraw = |current: usize, domain: usize, rng: &mut R| -> usize {
        if domain <= 1 {
            return current;
        }
        let v = rng.gen_range(0..domain - 1);
        if v >= current {
            v + 1
        } else {
            v
        }
    };
    for pos in sample(rng, total, h.min(total)).into_vec() {
        if pos == total - 1 {
            child.out = redraw(child.out, n + 2 * g.nodes.len(), rng);
            continue;
        }
        let (j, field) = (pos / 3, pos % 3);
        let limit = n + 2 * j;
        let gene = &mut child.nodes[j];
        match field {
            0 => gene.in1 = redraw(gene.in1, limit, rng),
            1 => gene.in2 = redraw(gene.in2, limit, rng),
            _ => gene.func = redraw(gene.func as usize, 2, rng) as u8,
        }
    }
    debug_assert!(child.is_valid());
    child
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Budget {
    Evaluations(u64),
    Seconds(f64),
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub initial: Network,
    /// Target area in the units of `tech`.
    pub target: f64,
    pub eps: f64,
    pub lambda: usize,
    pub mutations: usize,
    pub capacity: usize,
    pub budget: Budget,
    pub seed: u64,
    pub tech: TechConfig,
    /// Evaluate offspring on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl SearchConfig {
    /// Defaults: lambda 4, two mutations, twice the seed's CAS count as node
    /// capacity, and half a comparator of tolerance.
    pub fn new(initial: Network, target: f64, tech: TechConfig) -> Self {
        let k = initial.prune().k();
        SearchConfig {
            target,
            eps: tech.a_cmp / 2.0,
            lambda: 4,
            mutations: 2,
            capacity: (2 * k).max(1),
            budget: Budget::Evaluations(10_000),
            seed: 0,
            tech,
            parallel: false,
            initial,
        }
    }

    /// Target area for a network of `cas` elements, scaled from the seed.
    pub fn target_for_cas(initial: &Network, cas: usize, tech: &TechConfig) -> f64 {
        let seed = cost(initial, tech);
        if seed.active() == 0 {
            return 0.0;
        }
        seed.area * cas as f64 / seed.active() as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SearchError::Config(msg.into()));
        if self.eps.is_nan() || self.eps < 0.0 {
            return bad("eps must be non-negative");
        }
        if self.lambda == 0 {
            return bad("lambda must be at least 1");
        }
        if self.mutations == 0 {
            return bad("at least one gene must be mutated");
        }
        if let Budget::Seconds(s) = self.budget {
            if s.is_nan() || s <= 0.0 {
                return bad("time budget must be positive");
            }
        }
        self.tech.validate().map_err(|e| SearchError::Config(e.to_string()))
    }

    pub fn in_band(&self, area: f64) -> bool {
        self.target - self.eps <= area && area <= self.target + self.eps
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.initial.n(),
            "initial": self.initial.to_text(),
            "target": self.target,
            "eps": self.eps,
            "lambda": self.lambda,
            "mutations": self.mutations,
            "capacity": self.capacity,
            "budget": self.budget,
            "seed": self.seed,
            "tech": self.tech,
            "parallel": self.parallel,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stage {
    Reduce,
    Refine,
}

impl Stage {
    pub fn number(self) -> u8 {
        match self {
            Stage::Reduce => 1,
            Stage::Refine => 2,
        }
    }
}

/// Lower is better. Stage 1 values order by area overshoot, then quality;
/// stage 2 values are the quality inside the band and infinite outside.
#[derive(Clone, Debug, PartialEq)]
pub enum Fitness {
    Finite { overshoot: f64, quality: BigRational },
    Infinite,
}

impl Eq for Fitness {}

impl Ord for Fitness {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Fitness::Infinite, Fitness::Infinite) => Ordering::Equal,
            (Fitness::Infinite, _) => Ordering::Greater,
            (_, Fitness::Infinite) => Ordering::Less,
            (
                Fitness::Finite {
                    overshoot: a,
                    quality: qa,
                },
                Fitness::Finite {
                    overshoot: b,
                    quality: qb,
                },
            ) => a.total_cmp(b).then_with(|| qa.cmp(qb)),
        }
    }
}

impl PartialOrd for Fitness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Fitness {
    pub fn is_finite(&self) -> bool {
        matches!(self, Fitness::Finite { .. })
    }
}

/// A decoded, costed and analysed genome.
#[derive(Clone, Debug)]
pub struct Evaluated {
    pub genome: Genome,
    pub network: Network,
    pub cost: CostReport,
    pub profile: ErrorProfile,
}

impl Evaluated {
    pub fn fitness(&self, cfg: &SearchConfig, stage: Stage) -> Fitness {
        fitness_of(&self.cost, &self.profile, cfg, stage)
    }
}

fn fitness_of(cost: &CostReport, profile: &ErrorProfile, cfg: &SearchConfig, stage: Stage) -> Fitness {
    match stage {
        Stage::Refine if cfg.in_band(cost.area) => Fitness::Finite {
            overshoot: 0.0,
            quality: profile.quality.clone(),
        },
        Stage::Refine => Fitness::Infinite,
        Stage::Reduce => Fitness::Finite {
            overshoot: (cost.area - (cfg.target + cfg.eps)).max(0.0),
            quality: profile.quality.clone(),
        },
    }
}

pub fn evaluate(g: &Genome, tech: &TechConfig) -> Result<Evaluated> {
    let network = decode(g);
    let profile = analysis::analyze(&network)?;
    Ok(Evaluated {
        genome: g.clone(),
        cost: cost(&network, tech),
        network,
        profile,
    })
}

pub fn fitness(g: &Genome, cfg: &SearchConfig, stage: Stage) -> Result<Fitness> {
    Ok(evaluate(g, &cfg.tech)?.fitness(cfg, stage))
}

/// Nondominated set under (area, quality), both minimised.
#[derive(Clone, Debug, Default)]
pub struct ParetoArchive {
    members: Vec<Evaluated>,
}

fn weakly_dominates(a: &Evaluated, b: &Evaluated) -> bool {
    a.cost.area <= b.cost.area && a.profile.quality <= b.profile.quality
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `point` unless an existing member is at least as good in both
    /// objectives; returns whether it was inserted.
    pub fn update(&mut self, point: Evaluated) -> bool {
        if self.members.iter().any(|m| weakly_dominates(m, &point)) {
            return false;
        }
        self.members.retain(|m| !weakly_dominates(&point, m));
        let pos = self
            .members
            .partition_point(|m| m.cost.area < point.cost.area);
        self.members.insert(pos, point);
        true
    }

    /// Members ordered by increasing area.
    pub fn members(&self) -> &[Evaluated] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let n = self.members.first().map_or(0, |m| m.profile.n);
        let mut s = String::from("k,n_A,n_P,n_R,depth,C,Q,dL,dR,h0");
        for r in 1..=n {
            let _ = write!(s, ",H{r}");
        }
        s.push('\n');
        for m in &self.members {
            let (c, p) = (&m.cost, &m.profile);
            let _ = write!(
                s,
                "{},{},{},{},{},{:.3},{:.6},{},{},{:.6}",
                c.active(),
                c.n_a,
                c.n_p,
                c.n_r,
                c.depth,
                c.area,
                p.quality_f64(),
                p.d_left,
                p.d_right,
                p.h0_f64()
            );
            for h in p.hist_f64() {
                let _ = write!(s, ",{h:.6}");
            }
            s.push('\n');
        }
        s
    }
}

/// One line of the per-generation log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: u64,
    pub evaluations: u64,
    pub stage: u8,
    pub area: f64,
    pub quality: f64,
}

pub struct SearchResult {
    pub archive: ParetoArchive,
    pub best: Evaluated,
    pub stage: Stage,
    /// Generation in which the band was first reached.
    pub refine_from: Option<u64>,
    pub evaluations: u64,
    pub log: Vec<GenerationRecord>,
}

impl SearchResult {
    pub fn log_csv(&self) -> String {
        let mut s = String::from("generation,evaluations,stage,C,Q\n");
        for r in &self.log {
            let _ = writeln!(
                s,
                "{},{},{},{:.3},{:.6}",
                r.generation, r.evaluations, r.stage, r.area, r.quality
            );
        }
        s
    }

    /// Writes `config.json`, `log.csv`, `pareto.csv`, `best.net` and the
    /// archive members (`archive/NNN.net` plus `.json` profiles).
    pub fn write_run_dir(&self, cfg: &SearchConfig, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("archive"))?;
        let config = serde_json::to_string_pretty(&cfg.to_json()).expect("json");
        std::fs::write(dir.join("config.json"), config + "\n")?;
        std::fs::write(dir.join("log.csv"), self.log_csv())?;
        std::fs::write(dir.join("pareto.csv"), self.archive.to_csv())?;
        std::fs::write(dir.join("best.net"), self.best.network.to_text())?;
        for (i, m) in self.archive.members().iter().enumerate() {
            std::fs::write(dir.join(format!("archive/{i:03}.net")), m.network.to_text())?;
            let mut profile = m.profile.to_json();
            profile["cost"] = m.cost.to_json();
            profile["genome"] = m.genome.to_sequence().into();
            let text = serde_json::to_string_pretty(&profile).expect("json");
            std::fs::write(dir.join(format!("archive/{i:03}.json")), text + "\n")?;
        }
        Ok(())
    }
}

/// Memoises analyses of decoded networks.
struct EvalCache {
    map: HashMap<Network, (CostReport, ErrorProfile)>,
}

impl EvalCache {
    const LIMIT: usize = 200_000;

    fn evaluate_all(&mut self, genomes: Vec<Genome>, cfg: &SearchConfig) -> Result<Vec<Evaluated>> {
        let decoded: Vec<Network> = genomes.iter().map(decode).collect();
        let missing: Vec<usize> = (0..decoded.len())
            .filter(|&i| !self.map.contains_key(&decoded[i]))
            .collect();
        let compute = |i: &usize| -> Result<(CostReport, ErrorProfile)> {
            let net = &decoded[*i];
            Ok((cost(net, &cfg.tech), analysis::analyze(net)?))
        };
        let fresh: Vec<(CostReport, ErrorProfile)> = if cfg.parallel {
            missing.par_iter().map(compute).collect::<Result<_>>()?
        } else {
            missing.iter().map(compute).collect::<Result<_>>()?
        };
        if self.map.len() + fresh.len() > Self::LIMIT {
            self.map.clear();
        }
        for (i, value) in missing.iter().zip(fresh) {
            self.map.insert(decoded[*i].clone(), value);
        }
        Ok(genomes
            .into_iter()
            .zip(decoded)
            .map(|(genome, network)| {
                let (cost, profile) = self.map[&network].clone();
                Evaluated {
                    genome,
                    network,
                    cost,
                    profile,
                }
            })
            .collect())
    }
}

/// Runs the two-stage search from `cfg.initial`.
pub fn evolve(cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial = cfg.initial.prune();
    let genome = encode(&initial, cfg.capacity.max(initial.k()), &mut rng)?;
    let mut cache = EvalCache { map: HashMap::new() };
    let mut parent = cache
        .evaluate_all(vec![genome], cfg)?
        .pop()
        .expect("one evaluation");

    let mut stage = if cfg.in_band(parent.cost.area) {
        Stage::Refine
    } else {
        Stage::Reduce
    };
    let mut refine_from = (stage == Stage::Refine).then_some(0);
    let mut parent_fitness = parent.fitness(cfg, stage);
    let mut archive = ParetoArchive::new();
    archive.update(parent.clone());

    let started = Instant::now();
    let mut evaluations = 0u64;
    let mut generation = 0u64;
    let record = |generation, evaluations, stage: Stage, p: &Evaluated| GenerationRecord {
        generation,
        evaluations,
        stage: stage.number(),
        area: p.cost.area,
        quality: p.profile.quality_f64(),
    };
    let mut log = vec![record(0, 0, stage, &parent)];

    loop {
        let more = match cfg.budget {
            Budget::Evaluations(limit) => evaluations + cfg.lambda as u64 <= limit,
            Budget::Seconds(s) => started.elapsed() < Duration::from_secs_f64(s),
        };
        if !more {
            break;
        }
        generation += 1;
        let mutants: Vec<Genome> = (0..cfg.lambda)
            .map(|_| mutate(&parent.genome, cfg.mutations, &mut rng))
            .collect();
        let offspring = cache.evaluate_all(mutants, cfg)?;
        evaluations += offspring.len() as u64;

        let mut best: Option<(Fitness, usize)> = None;
        for (i, child) in offspring.iter().enumerate() {
            let f = child.fitness(cfg, stage);
            if f.is_finite() {
                archive.update(child.clone());
            }
            // strict comparison keeps the lowest index on ties
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, i));
            }
        }
        if let Some((f, i)) = best {
            if f <= parent_fitness {
                parent = offspring.into_iter().nth(i).expect("index in range");
                parent_fitness = f;
            }
        }
        if stage == Stage::Reduce && cfg.in_band(parent.cost.area) {
            stage = Stage::Refine;
            refine_from = Some(generation);
            parent_fitness = parent.fitness(cfg, stage);
        }
        log.push(record(generation, evaluations, stage, &parent));
    }

    Ok(SearchResult {
        archive,
        best: parent,
        stage,
        refine_from,
        evaluations,
        log,
    })
}
