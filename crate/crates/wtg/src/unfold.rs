//! The finite acyclic unfolding of a closure game, tracking the path since the start.
//!
//! A path node remembers every reset transition it has used. Taking a used reset transition a
//! second time closes a cycle and resolves to one of two synthetic targets according to the
//! sign of that cycle's value; a reset-free stretch of length `κ` resolves to a `+inf` target.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::arith::{ExtValue, Inf, Rational};
use crate::game::Owner;
use crate::error::PwaError;
use crate::path::{cycle_value, FinitePath, PathError};
use crate::pwa::Pwa;
use crate::region::ClosedGame;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// A finite path of the closure game that has not resolved yet; `loc` is its last location.
    Path,
    /// A target location of the closure game.
    Target,
    /// Repeated reset transition whose cycle has nonnegative value.
    TGeq0,
    /// Repeated reset transition whose cycle has negative value.
    TLt0,
    /// Reset-free stretch reached the bound.
    TInf,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub kind: NodeKind,
    /// Closure location for path and target nodes.
    pub loc: Option<usize>,
    /// Parent node and the closure transition leading here (path nodes only).
    pub parent: Option<(usize, usize)>,
    pub depth: usize,
    /// Reset transitions used so far, with their position on the path.
    pub resets: Vec<(usize, usize)>,
    /// Length of the maximal reset-free suffix.
    pub free_suffix: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// The closure transition this edge copies.
    pub proj: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct UnfoldStats {
    pub nodes: usize,
    pub edges: usize,
    pub path_nodes: usize,
    pub max_path_len: usize,
    pub target_leaves: usize,
    pub geq0_edges: usize,
    pub lt0_edges: usize,
    pub inf_edges: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum UnfoldError {
    #[error("transition does not leave the last location of the path")]
    SourceMismatch,
    #[error("node budget {budget} exceeded: {stats:?}")]
    BudgetExceeded { budget: usize, stats: UnfoldStats },
    #[error("cycle detected in the unfolding")]
    CycleDetected,
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Pwa(#[from] PwaError),
}

#[derive(Clone, Debug)]
pub struct Unfolding {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub out: Vec<Vec<usize>>,
    pub kappa: usize,
    pub geq0: usize,
    pub lt0: usize,
    pub inf: usize,
    targets: HashMap<usize, usize>,
}

/// Where `next` sends a path along one transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Target(usize),
    Extend,
    Geq0,
    Lt0,
    Inf,
}

/// Bound on reset-free stretches, following the unit-constant instantiation of the switching bound.
pub fn kappa_bound(g: &ClosedGame) -> BigUint {
    kappa_formula(g.locations.len(), g.w_loc.unsigned_abs(), g.w_tr.unsigned_abs())
}

/// `κ' + κ''` with `|σ1| = W_tr^4 |L|^9`, `κ' = |L|(W_loc + |σ1| W_tr |L|) + |σ1|` and `κ'' = |L|`.
pub fn kappa_formula(locations: usize, w_loc: u64, w_tr: u64) -> BigUint {
    let l = BigUint::from(locations);
    let wtr = BigUint::from(w_tr);
    let wloc = BigUint::from(w_loc);
    let sigma1 = wtr.pow(4) * l.pow(9);
    let kappa1 = &l * (wloc + &sigma1 * &wtr * &l) + &sigma1;
    kappa1 + l
}

pub fn saturating_usize(n: &BigUint) -> usize {
    n.to_usize().unwrap_or(usize::MAX)
}

/// Constant final weight of the nonnegative-cycle target: `|L|(W_tr + M W_loc) + W_fin`.
pub fn geq0_weight(g: &ClosedGame) -> Rational {
    let l = g.locations.len() as i64;
    Rational::from_int(l * (g.w_tr + g.clock_bound * g.w_loc)) + &g.w_fin
}

/// Cycle values already computed, shared across unfoldings of one closure game.
#[derive(Default)]
pub struct CycleCache {
    memo: HashMap<Vec<usize>, ExtValue>,
}

impl Unfolding {
    pub fn root(&self) -> usize {
        0
    }

    pub fn is_leaf(&self, n: usize) -> bool {
        self.nodes[n].kind != NodeKind::Path
    }

    /// Closure transitions along the path of a path node.
    pub fn path_of(&self, mut n: usize) -> Vec<usize> {
        let mut rev = Vec::with_capacity(self.nodes[n].depth);
        while let Some((p, t)) = self.nodes[n].parent {
            rev.push(t);
            n = p;
        }
        rev.reverse();
        rev
    }

    pub fn domain(&self, g: &ClosedGame, n: usize) -> (Rational, Rational) {
        match self.nodes[n].loc {
            Some(l) => (g.locations[l].lo.clone(), g.locations[l].hi.clone()),
            None => (Rational::zero(), g.m()),
        }
    }

    pub fn owner(&self, g: &ClosedGame, n: usize) -> Owner {
        self.nodes[n].loc.map_or(Owner::Target, |l| g.locations[l].owner)
    }

    /// Final weight of a leaf.
    pub fn leaf_value(&self, g: &ClosedGame, n: usize) -> Pwa {
        let (lo, hi) = self.domain(g, n);
        match self.nodes[n].kind {
            NodeKind::Target => g.locations[self.nodes[n].loc.unwrap()].final_weight.clone().expect("target"),
            NodeKind::TGeq0 => Pwa::constant(lo, hi, geq0_weight(g)),
            NodeKind::TLt0 => Pwa::uniform_inf(lo, hi, Inf::Neg),
            NodeKind::TInf => Pwa::uniform_inf(lo, hi, Inf::Pos),
            NodeKind::Path => panic!("not a leaf"),
        }
    }

    pub fn stats(&self) -> UnfoldStats {
        let mut s = UnfoldStats { nodes: self.nodes.len(), edges: self.edges.len(), ..Default::default() };
        for n in &self.nodes {
            match n.kind {
                NodeKind::Path => {
                    s.path_nodes += 1;
                    s.max_path_len = s.max_path_len.max(n.depth);
                }
                NodeKind::Target => s.target_leaves += 1,
                _ => {}
            }
        }
        for e in &self.edges {
            if e.to == self.geq0 {
                s.geq0_edges += 1;
            } else if e.to == self.lt0 {
                s.lt0_edges += 1;
            } else if e.to == self.inf {
                s.inf_edges += 1;
            }
        }
        s
    }

    pub fn to_dot(&self, g: &ClosedGame) -> String {
        let mut s = String::from("digraph unfolding {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let label = match n.kind {
                NodeKind::Path | NodeKind::Target => g.locations[n.loc.unwrap()].id.clone(),
                NodeKind::TGeq0 => "t>=0".into(),
                NodeKind::TLt0 => "t<0".into(),
                NodeKind::TInf => "t+inf".into(),
            };
            s.push_str(&format!("  u{i} [label=\"{label}\"];\n"));
        }
        for e in &self.edges {
            s.push_str(&format!("  u{} -> u{} [label=\"{}\"];\n", e.from, e.to, g.transitions[e.proj].id));
        }
        s.push_str("}\n");
        s
    }

    /// Longest possible node path: at most `|Δ_R| + 1` reset-free stretches of length `κ`,
    /// joined by pairwise distinct resets.
    pub fn path_bound(&self, g: &ClosedGame) -> usize {
        let resets = g.reset_transitions();
        (resets + 1) * self.kappa + resets
    }

    /// Checks that each edge goes to a fresh child or a leaf, path depths stay within
    /// [`Unfolding::path_bound`], resets along any path are distinct, and reset-free stretches
    /// are at most `κ`.
    pub fn check_structure(&self, g: &ClosedGame) -> Result<(), String> {
        let bound = self.path_bound(g);
        for e in &self.edges {
            if !(e.to > e.from || self.is_leaf(e.to)) {
                return Err(format!("edge {} -> {} breaks topological order", e.from, e.to));
            }
            if self.is_leaf(e.from) {
                return Err(format!("leaf {} has an outgoing edge", e.from));
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.kind != NodeKind::Path {
                continue;
            }
            if n.depth > bound {
                return Err(format!("node {i} has path length {} > {bound}", n.depth));
            }
            let path = self.path_of(i);
            if path.len() != n.depth {
                return Err(format!("node {i} depth mismatch"));
            }
            let mut resets: Vec<usize> = path.iter().copied().filter(|&t| g.transitions[t].reset).collect();
            let k = resets.len();
            resets.sort_unstable();
            resets.dedup();
            if resets.len() != k {
                return Err(format!("node {i} repeats a reset transition"));
            }
            let mut stretch = 0;
            for &t in &path {
                if g.transitions[t].reset {
                    stretch = 0;
                } else {
                    stretch += 1;
                    if stretch > self.kappa {
                        return Err(format!("node {i} has a reset-free stretch longer than κ"));
                    }
                }
            }
        }
        Ok(())
    }
}

struct Builder<'g> {
    g: &'g ClosedGame,
    core: &'g [bool],
    u: Unfolding,
    cycles: &'g mut CycleCache,
}

impl Builder<'_> {
    fn push(&mut self, node: Node) -> usize {
        self.u.nodes.push(node);
        self.u.out.push(Vec::new());
        self.u.nodes.len() - 1
    }

    fn target_node(&mut self, loc: usize) -> usize {
        if let Some(&n) = self.u.targets.get(&loc) {
            return n;
        }
        let n = self.push(Node {
            kind: NodeKind::Target,
            loc: Some(loc),
            parent: None,
            depth: 0,
            resets: vec![],
            free_suffix: 0,
        });
        self.u.targets.insert(loc, n);
        n
    }

    fn cycle_sign(&mut self, cycle: Vec<usize>, start: usize) -> Result<bool, UnfoldError> {
        if let Some(v) = self.cycles.memo.get(&cycle) {
            return Ok(v >= &ExtValue::int(0));
        }
        let pi = FinitePath::new(self.g, start, cycle.clone())?;
        let v = cycle_value(self.g, &pi)?;
        let nonneg = v >= ExtValue::int(0);
        self.cycles.memo.insert(cycle, v);
        Ok(nonneg)
    }

    fn next(&mut self, n: usize, t: usize) -> Result<Step, UnfoldError> {
        let tr = &self.g.transitions[t];
        let node = &self.u.nodes[n];
        if node.loc != Some(tr.from) {
            return Err(UnfoldError::SourceMismatch);
        }
        if self.g.locations[tr.to].is_target() {
            return Ok(Step::Target(tr.to));
        }
        if tr.reset {
            return match node.resets.iter().find(|(r, _)| *r == t) {
                None => Ok(Step::Extend),
                Some(&(_, pos)) => {
                    let path = self.u.path_of(n);
                    let mut cycle = path[pos + 1..].to_vec();
                    cycle.push(t);
                    let start = self.g.transitions[path[pos]].to;
                    Ok(if self.cycle_sign(cycle, start)? { Step::Geq0 } else { Step::Lt0 })
                }
            };
        }
        Ok(if node.free_suffix + 1 > self.u.kappa { Step::Inf } else { Step::Extend })
    }
}

/// Builds the unfolding from `root`, following only transitions into `core` locations.
/// A target root gives the one-node unfolding.
pub fn build_unfolding(
    g: &ClosedGame,
    root: usize,
    kappa: usize,
    budget: usize,
    core: &[bool],
    cycles: &mut CycleCache,
) -> Result<Unfolding, UnfoldError> {
    let u = Unfolding {
        nodes: vec![],
        edges: vec![],
        out: vec![],
        kappa,
        geq0: 0,
        lt0: 0,
        inf: 0,
        targets: HashMap::new(),
    };
    let mut b = Builder { g, core, u, cycles };
    let at_target = g.locations[root].is_target();
    if at_target {
        b.target_node(root);
    } else {
        b.push(Node {
            kind: NodeKind::Path,
            loc: Some(root),
            parent: None,
            depth: 0,
            resets: vec![],
            free_suffix: 0,
        });
    }
    let leaf = |kind| Node { kind, loc: None, parent: None, depth: 0, resets: vec![], free_suffix: 0 };
    b.u.geq0 = b.push(leaf(NodeKind::TGeq0));
    b.u.lt0 = b.push(leaf(NodeKind::TLt0));
    b.u.inf = b.push(leaf(NodeKind::TInf));
    if at_target {
        return Ok(b.u);
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(n) = queue.pop_front() {
        let loc = b.u.nodes[n].loc.unwrap();
        for &t in &g.outgoing[loc] {
            let to = g.transitions[t].to;
            if !b.core[to] {
                continue;
            }
            let dest = match b.next(n, t)? {
                Step::Target(l) => b.target_node(l),
                Step::Geq0 => b.u.geq0,
                Step::Lt0 => b.u.lt0,
                Step::Inf => b.u.inf,
                Step::Extend => {
                    let parent = &b.u.nodes[n];
                    let mut resets = parent.resets.clone();
                    let reset = g.transitions[t].reset;
                    if reset {
                        resets.push((t, parent.depth));
                    }
                    let child = Node {
                        kind: NodeKind::Path,
                        loc: Some(to),
                        parent: Some((n, t)),
                        depth: parent.depth + 1,
                        resets,
                        free_suffix: if reset { 0 } else { parent.free_suffix + 1 },
                    };
                    let c = b.push(child);
                    queue.push_back(c);
                    c
                }
            };
            b.u.edges.push(Edge { from: n, to: dest, proj: t });
            b.u.out[n].push(b.u.edges.len() - 1);
            if b.u.nodes.len() > budget {
                return Err(UnfoldError::BudgetExceeded { budget, stats: b.u.stats() });
            }
        }
    }
    Ok(b.u)
}
