//! Reduced ordered binary decision diagrams with exact model counting.
//!
//! Variables are numbered `1..=n` and ordered naturally (`x_1` at the root).
//! Nodes are hash-consed in a unique table, so two handles from the same
//! manager are equal exactly when they denote the same function. There are
//! no complement edges; negation is an ordinary memoized operation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU32, Ordering};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("variable index {index} out of range 1..={vars}")]
    VarOutOfRange { index: usize, vars: usize },
    #[error("handles belong to different managers")]
    ForeignHandle,
}

static NEXT_MANAGER_ID: AtomicU32 = AtomicU32::new(1);

/// Handle to a node owned by one [`BddManager`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BddRef {
    manager: u32,
    index: u32,
}

impl BddRef {
    /// Position of the node in the manager's store (0 = FALSE, 1 = TRUE).
    pub fn index(self) -> u32 {
        self.index
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    /// 0-based level; terminals sit at level `vars`.
    level: u32,
    low: u32,
    high: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
}

const FALSE: u32 = 0;
const TRUE: u32 = 1;

pub struct BddManager {
    id: u32,
    vars: usize,
    nodes: Vec<Node>,
    unique: HashMap<Node, u32>,
    apply_cache: HashMap<(Op, u32, u32), u32>,
    not_cache: HashMap<u32, u32>,
}

impl BddManager {
    pub fn new(vars: usize) -> Self {
        let terminal = |v| Node {
            level: vars as u32,
            low: v,
            high: v,
        };
        BddManager {
            id: NEXT_MANAGER_ID.fetch_add(1, Ordering::Relaxed),
            vars,
            nodes: vec![terminal(FALSE), terminal(TRUE)],
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            not_cache: HashMap::new(),
        }
    }

    pub fn var_count(&self) -> usize {
        self.vars
    }

    /// Total nodes stored, terminals included.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn handle(&self, index: u32) -> BddRef {
        BddRef {
            manager: self.id,
            index,
        }
    }

    fn check(&self, f: BddRef) -> Result<u32, BddError> {
        if f.manager == self.id {
            Ok(f.index)
        } else {
            Err(BddError::ForeignHandle)
        }
    }

    pub fn constant(&self, value: bool) -> BddRef {
        self.handle(if value { TRUE } else { FALSE })
    }

    pub fn fals(&self) -> BddRef {
        self.constant(false)
    }

    pub fn tru(&self) -> BddRef {
        self.constant(true)
    }

    /// The projection `x_i`, `1 <= i <= n`.
    pub fn var(&mut self, i: usize) -> Result<BddRef, BddError> {
        if i == 0 || i > self.vars {
            return Err(BddError::VarOutOfRange {
                index: i,
                vars: self.vars,
            });
        }
        let idx = self.mk((i - 1) as u32, FALSE, TRUE);
        Ok(self.handle(idx))
    }

    fn mk(&mut self, level: u32, low: u32, high: u32) -> u32 {
        if low == high {
            return low;
        }
        let node = Node { level, low, high };
        if let Some(&idx) = self.unique.get(&node) {
            return idx;
        }
        let idx = u32::try_from(self.nodes.len()).expect("BDD node store overflow");
        self.nodes.push(node);
        self.unique.insert(node, idx);
        idx
    }

    fn level(&self, f: u32) -> u32 {
        self.nodes[f as usize].level
    }

    fn cofactors(&self, f: u32, level: u32) -> (u32, u32) {
        let node = self.nodes[f as usize];
        if node.level == level {
            (node.low, node.high)
        } else {
            (f, f)
        }
    }

    fn apply_rec(&mut self, op: Op, a: u32, b: u32) -> u32 {
        match op {
            Op::And => {
                if a == FALSE || b == FALSE {
                    return FALSE;
                }
                if a == TRUE {
                    return b;
                }
                if b == TRUE || a == b {
                    return a;
                }
            }
            Op::Or => {
                if a == TRUE || b == TRUE {
                    return TRUE;
                }
                if a == FALSE {
                    return b;
                }
                if b == FALSE || a == b {
                    return a;
                }
            }
        }
        let key = (op, a.min(b), a.max(b));
        if let Some(&r) = self.apply_cache.get(&key) {
            return r;
        }
        let level = self.level(a).min(self.level(b));
        let (a0, a1) = self.cofactors(a, level);
        let (b0, b1) = self.cofactors(b, level);
        let low = self.apply_rec(op, a0, b0);
        let high = self.apply_rec(op, a1, b1);
        let r = self.mk(level, low, high);
        self.apply_cache.insert(key, r);
        r
    }

    fn not_rec(&mut self, f: u32) -> u32 {
        match f {
            FALSE => return TRUE,
            TRUE => return FALSE,
            _ => {}
        }
        if let Some(&r) = self.not_cache.get(&f) {
            return r;
        }
        let node = self.nodes[f as usize];
        let low = self.not_rec(node.low);
        let high = self.not_rec(node.high);
        let r = self.mk(node.level, low, high);
        self.not_cache.insert(f, r);
        r
    }

    pub fn and(&mut self, a: BddRef, b: BddRef) -> Result<BddRef, BddError> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        let r = self.apply_rec(Op::And, a, b);
        Ok(self.handle(r))
    }

    pub fn or(&mut self, a: BddRef, b: BddRef) -> Result<BddRef, BddError> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        let r = self.apply_rec(Op::Or, a, b);
        Ok(self.handle(r))
    }

    pub fn not(&mut self, a: BddRef) -> Result<BddRef, BddError> {
        let a = self.check(a)?;
        let r = self.not_rec(a);
        Ok(self.handle(r))
    }

    /// Drops memoized operation results; the unique table is kept.
    pub fn clear_cache(&mut self) {
        self.apply_cache.clear();
        self.not_cache.clear();
    }

    /// Number of satisfying assignments over all `n` variables.
    pub fn satcount(&self, f: BddRef) -> Result<BigUint, BddError> {
        let f = self.check(f)?;
        let mut memo: HashMap<u32, BigUint> = HashMap::new();
        let below = self.count_below(f, &mut memo);
        Ok(below << self.level(f) as usize)
    }

    /// Models over the variables at or below `f`'s level.
    fn count_below(&self, f: u32, memo: &mut HashMap<u32, BigUint>) -> BigUint {
        match f {
            FALSE => return BigUint::zero(),
            TRUE => return BigUint::one(),
            _ => {}
        }
        if let Some(c) = memo.get(&f) {
            return c.clone();
        }
        let node = self.nodes[f as usize];
        let mut total = BigUint::zero();
        for child in [node.low, node.high] {
            let skipped = (self.level(child) - node.level - 1) as usize;
            total += self.count_below(child, memo) << skipped;
        }
        memo.insert(f, total.clone());
        total
    }

    /// Internal nodes reachable from `f`.
    pub fn size(&self, f: BddRef) -> Result<usize, BddError> {
        let f = self.check(f)?;
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![f];
        while let Some(x) = stack.pop() {
            if x <= TRUE || !seen.insert(x) {
                continue;
            }
            let node = self.nodes[x as usize];
            stack.push(node.low);
            stack.push(node.high);
        }
        Ok(seen.len())
    }

    /// Evaluates `f` on an assignment (`assignment[i]` is `x_{i+1}`).
    pub fn eval(&self, f: BddRef, assignment: &[bool]) -> Result<bool, BddError> {
        let mut x = self.check(f)?;
        while x > TRUE {
            let node = self.nodes[x as usize];
            x = if assignment[node.level as usize] {
                node.high
            } else {
                node.low
            };
        }
        Ok(x == TRUE)
    }

    /// "At least `k` of the `n` variables are 1", built directly by
    /// dynamic programming over the levels.
    pub fn threshold(&mut self, k: usize) -> BddRef {
        let n = self.vars;
        // next[j]: function of the variables below the current level given
        // that j ones have been seen so far
        let mut next: Vec<u32> = (0..=n).map(|j| if j >= k { TRUE } else { FALSE }).collect();
        for level in (0..n).rev() {
            let cur: Vec<u32> = (0..=level)
                .map(|j| self.mk(level as u32, next[j], next[j + 1]))
                .collect();
            next = cur;
        }
        self.handle(next[0])
    }

    /// Graphviz rendering of `f` for debugging.
    pub fn to_dot(&self, f: BddRef) -> Result<String, BddError> {
        let root = self.check(f)?;
        let mut out = String::from("digraph bdd {\n  F [shape=box,label=\"0\"];\n  T [shape=box,label=\"1\"];\n");
        let name = |x: u32| match x {
            FALSE => "F".to_string(),
            TRUE => "T".to_string(),
            _ => format!("n{x}"),
        };
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            if x <= TRUE || !seen.insert(x) {
                continue;
            }
            let node = self.nodes[x as usize];
            let _ = writeln!(out, "  n{x} [label=\"x{}\"];", node.level + 1);
            let _ = writeln!(out, "  n{x} -> {} [style=dashed];", name(node.low));
            let _ = writeln!(out, "  n{x} -> {};", name(node.high));
            stack.push(node.low);
            stack.push(node.high);
        }
        if root <= TRUE {
            let _ = writeln!(out, "  root -> {};", name(root));
        }
        out.push_str("}\n");
        Ok(out)
    }
}
