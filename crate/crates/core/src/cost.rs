//! Area estimate for a fully pipelined implementation.
//!
//! Each CAS occupies one pipeline stage (ASAP). A CAS whose two outputs are
//! both used needs a comparator and two multiplexers; one with a single used
//! output needs a comparator and one multiplexer. Every signal that lives
//! across a stage boundary costs one register per boundary crossed. Primary
//! inputs and the final output are not registered.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Network, Signal};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid technology parameter: {0}")]
    Invalid(String),
}

/// Cell areas of the target technology at data width `width`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechConfig {
    pub a_mx: f64,
    pub a_cmp: f64,
    pub a_reg: f64,
    pub width: u32,
}

impl Default for TechConfig {
    /// Placeholder areas in arbitrary units; only ratios are meaningful.
    fn default() -> Self {
        TechConfig {
            a_mx: 18.0,
            a_cmp: 40.0,
            a_reg: 22.0,
            width: 8,
        }
    }
}

impl TechConfig {
    pub fn validate(&self) -> Result<(), CostError> {
        for (name, v) in [("a_mx", self.a_mx), ("a_cmp", self.a_cmp), ("a_reg", self.a_reg)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CostError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.width == 0 {
            return Err(CostError::Invalid("width must be at least 1".into()));
        }
        Ok(())
    }

    /// Area of a CAS with both outputs used.
    pub fn full_cas_area(&self) -> f64 {
        2.0 * self.a_mx + self.a_cmp
    }

    pub fn to_text(&self) -> String {
        format!(
            "a_mx={}\na_cmp={}\na_reg={}\nwidth={}\n",
            self.a_mx, self.a_cmp, self.a_reg, self.width
        )
    }
}

impl FromStr for TechConfig {
    type Err = CostError;

    /// `key=value` lines; missing keys keep their defaults.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut tech = TechConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |msg: String| CostError::Parse { line, msg };
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, found `{body}`")))?;
            let value = value.trim();
            let area = || {
                value
                    .parse::<f64>()
                    .map_err(|_| err(format!("`{value}` is not a number")))
            };
            match key.trim() {
                "a_mx" => tech.a_mx = area()?,
                "a_cmp" => tech.a_cmp = area()?,
                "a_reg" => tech.a_reg = area()?,
                "width" | "w" => {
                    tech.width = value
                        .parse()
                        .map_err(|_| err(format!("`{value}` is not a width")))?
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        tech.validate()?;
        Ok(tech)
    }
}

/// Active CAS classification of a single-output network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeClasses {
    /// Active CAS with both outputs consumed.
    pub both: usize,
    /// Active CAS with exactly one output consumed.
    pub partial: usize,
    /// Indices (in the input network) of CAS that reach no output.
    pub inactive: Vec<usize>,
}

/// Consumers of every signal in an already pruned network. The output
/// signal is consumed by the pseudo-node `usize::MAX`.
fn consumers(net: &Network) -> Vec<Vec<usize>> {
    let mut uses = vec![Vec::new(); net.signal_count()];
    for (k, op) in net.ops().iter().enumerate() {
        uses[op.a].push(k);
        uses[op.b].push(k);
    }
    for &o in net.outputs() {
        uses[o].push(usize::MAX);
    }
    uses
}

pub fn classify_nodes(net: &Network) -> NodeClasses {
    let active = net.active_ops();
    let inactive = (0..net.k()).filter(|&k| !active[k]).collect();
    let pruned = net.prune();
    let uses = consumers(&pruned);
    let (mut both, mut partial) = (0, 0);
    for k in 0..pruned.k() {
        let lo = !uses[pruned.min_signal(k)].is_empty();
        let hi = !uses[pruned.max_signal(k)].is_empty();
        match (lo, hi) {
            (true, true) => both += 1,
            (false, false) => unreachable!("pruned network has an unused CAS"),
            _ => partial += 1,
        }
    }
    NodeClasses {
        both,
        partial,
        inactive,
    }
}

/// ASAP stage of every CAS (1-based) and the pipeline depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub stages: Vec<usize>,
    pub depth: usize,
}

impl Schedule {
    /// Stage at which `s` becomes available (0 for primary inputs).
    pub fn signal_stage(&self, net: &Network, s: Signal) -> usize {
        net.producer(s).map_or(0, |k| self.stages[k])
    }
}

pub fn asap_schedule(net: &Network) -> Schedule {
    let mut stages: Vec<usize> = Vec::with_capacity(net.k());
    let stage_of = |stages: &[usize], s: Signal| net.producer(s).map_or(0, |k| stages[k]);
    for op in net.ops() {
        let st = 1 + stage_of(&stages, op.a).max(stage_of(&stages, op.b));
        stages.push(st);
    }
    let depth = stages.iter().copied().max().unwrap_or(0);
    Schedule { stages, depth }
}

/// Register boundaries crossed by each signal: `(signal, first, last)` means
/// a register after stages `first..=last`.
pub fn register_spans(net: &Network, schedule: &Schedule) -> Vec<(Signal, usize, usize)> {
    let uses = consumers(net);
    let mut spans = Vec::new();
    for (s, users) in uses.iter().enumerate() {
        let last_use = users
            .iter()
            .filter(|&&u| u != usize::MAX)
            .map(|&u| schedule.stages[u])
            .max();
        let Some(last_use) = last_use else { continue };
        let produced = schedule.signal_stage(net, s).max(1);
        if last_use > produced {
            spans.push((s, produced, last_use - 1));
        }
    }
    spans
}

pub fn register_count(net: &Network, schedule: &Schedule) -> usize {
    register_spans(net, schedule)
        .iter()
        .map(|&(_, first, last)| last + 1 - first)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub n_a: usize,
    pub n_p: usize,
    pub n_r: usize,
    pub depth: usize,
    pub area: f64,
}

impl CostReport {
    pub fn active(&self) -> usize {
        self.n_a + self.n_p
    }

    pub fn area_for(tech: &TechConfig, n_a: usize, n_p: usize, n_r: usize) -> f64 {
        tech.a_mx * (2 * n_a + n_p) as f64 + tech.a_cmp * (n_a + n_p) as f64 + tech.a_reg * n_r as f64
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n_A": self.n_a,
            "n_P": self.n_p,
            "n_R": self.n_r,
            "k": self.active(),
            "depth": self.depth,
            "C": self.area,
        })
    }
}

/// Estimated area of `net` after pruning.
pub fn cost(net: &Network, tech: &TechConfig) -> CostReport {
    let pruned = net.prune();
    let classes = classify_nodes(&pruned);
    let schedule = asap_schedule(&pruned);
    let n_r = register_count(&pruned, &schedule);
    CostReport {
        n_a: classes.both,
        n_p: classes.partial,
        n_r,
        depth: schedule.depth,
        area: CostReport::area_for(tech, classes.both, classes.partial, n_r),
    }
}

/// Structural VHDL for the pruned network: one comparator per CAS, one
/// multiplexer per used output, and a register per signal per stage
/// boundary it crosses.
pub fn emit_rtl(net: &Network, tech: &TechConfig, entity: &str) -> String {
    let net = net.prune();
    let schedule = asap_schedule(&net);
    let uses = consumers(&net);
    let spans = register_spans(&net, &schedule);
    let w = tech.width;
    let ty = format!("unsigned({} downto 0)", w - 1);

    // name of signal `s` as seen by a consumer at stage `at`
    let mut registered: BTreeMap<Signal, (usize, usize)> = BTreeMap::new();
    for &(s, first, last) in &spans {
        registered.insert(s, (first, last));
    }
    let base = |s: Signal| -> String {
        if s < net.n() {
            format!("x{s}")
        } else {
            format!("s{s}")
        }
    };
    let seen_at = |s: Signal, at: usize| -> String {
        match registered.get(&s) {
            Some(&(first, last)) if at > first => format!("{}_r{}", base(s), (at - 1).min(last)),
            _ => base(s),
        }
    };

    let mut v = String::new();
    let _ = writeln!(v, "-- {} CAS, depth {}, width {}", net.k(), schedule.depth, w);
    v.push_str("library ieee;\nuse ieee.std_logic_1164.all;\nuse ieee.numeric_std.all;\n\n");
    let _ = writeln!(v, "entity {entity} is");
    v.push_str("  port (\n    clk : in std_logic;\n");
    for i in 0..net.n() {
        let _ = writeln!(v, "    x{i} : in {ty};");
    }
    for (j, _) in net.outputs().iter().enumerate() {
        let sep = if j + 1 == net.outputs().len() { "" } else { ";" };
        let _ = writeln!(v, "    y{j} : out {ty}{sep}");
    }
    v.push_str("  );\nend entity;\n\n");
    let _ = writeln!(v, "architecture pipelined of {entity} is");
    for k in 0..net.k() {
        let _ = writeln!(v, "  signal c{k} : std_logic;");
        for s in [net.min_signal(k), net.max_signal(k)] {
            if !uses[s].is_empty() {
                let _ = writeln!(v, "  signal s{s} : {ty};");
            }
        }
    }
    for &(s, first, last) in &spans {
        for b in first..=last {
            let _ = writeln!(v, "  signal {}_r{b} : {ty};", base(s));
        }
    }
    v.push_str("begin\n");
    for (k, op) in net.ops().iter().enumerate() {
        let stage = schedule.stages[k];
        let (a, b) = (seen_at(op.a, stage), seen_at(op.b, stage));
        let _ = writeln!(v, "  -- cas {k}, stage {stage}");
        let _ = writeln!(v, "  c{k} <= '1' when {a} <= {b} else '0';");
        let (lo, hi) = (net.min_signal(k), net.max_signal(k));
        if !uses[lo].is_empty() {
            let _ = writeln!(v, "  s{lo} <= {a} when c{k} = '1' else {b};");
        }
        if !uses[hi].is_empty() {
            let _ = writeln!(v, "  s{hi} <= {b} when c{k} = '1' else {a};");
        }
    }
    for (j, &o) in net.outputs().iter().enumerate() {
        let _ = writeln!(v, "  y{j} <= {};", base(o));
    }
    if !spans.is_empty() {
        v.push_str("  pipeline : process (clk)\n  begin\n    if rising_edge(clk) then\n");
        for &(s, first, last) in &spans {
            for b in first..=last {
                let src = if b == first {
                    base(s)
                } else {
                    format!("{}_r{}", base(s), b - 1)
                };
                let _ = writeln!(v, "      {}_r{b} <= {src}; -- reg", base(s));
            }
        }
        v.push_str("    end if;\n  end process;\n");
    }
    v.push_str("end architecture;\n");
    v
}
