//! Strategies read off a solved closure game: Max plays the pointwise argmax of the one-step
//! optimum, Min plays a switching pair.

use serde_json::{json, Value};

use crate::arith::{ExtValue, Rational};
use crate::error::PwaError;
use crate::game::Owner;
use crate::pwa::{Opt, Pwa};
use crate::region::ClosedGame;
use crate::solver::{apply_f_at, Attractor};
use crate::unfold::Unfolding;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("value map is not a fixpoint at `{0}`")]
    UncertifiedInput(String),
    #[error(transparent)]
    Pwa(#[from] PwaError),
}

/// How long to wait, as a function of the current valuation `ν`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Delay {
    /// Fire immediately.
    Now,
    /// Wait until the clock reads `c`: delay `c - ν`.
    Until(Rational),
}

impl Delay {
    pub fn at(&self, v: &Rational) -> Rational {
        match self {
            Delay::Now => Rational::zero(),
            Delay::Until(c) => c - v,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Delay::Now => "0".into(),
            Delay::Until(c) => format!("{c} - x"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
    /// Closure transition index.
    pub transition: usize,
    pub delay: Delay,
}

impl Entry {
    pub fn contains(&self, v: &Rational) -> bool {
        let above = if self.lo_closed { v >= &self.lo } else { v > &self.lo };
        let below = if self.hi_closed { v <= &self.hi } else { v < &self.hi };
        above && below
    }

    pub fn interval(&self) -> String {
        if self.lo == self.hi {
            return format!("{{{}}}", self.lo);
        }
        format!(
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Decisions over the domain of one location, as disjoint intervals in increasing order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecisionTable {
    pub entries: Vec<Entry>,
}

impl DecisionTable {
    pub fn lookup(&self, v: &Rational) -> Option<&Entry> {
        self.entries.iter().find(|e| e.contains(v))
    }

    pub fn to_json(&self, g: &ClosedGame) -> Value {
        Value::Array(
            self.entries
                .iter()
                .map(|e| {
                    json!({
                        "interval": e.interval(),
                        "transition": g.transitions[e.transition].id,
                        "delay": e.delay.describe(),
                    })
                })
                .collect(),
        )
    }
}

/// Best move at valuation `x` among `edges` (closure transition, successor value), with its
/// landing date and its value. Ties go to the earlier edge, then to the earlier landing date.
pub fn decide_at(
    g: &ClosedGame,
    player: Opt,
    urgent: bool,
    rate: &Rational,
    edges: &[(usize, &Pwa)],
    x: &Rational,
) -> Result<Option<(usize, Rational, ExtValue)>, PwaError> {
    let zero = Rational::zero();
    let mut best: Option<(usize, Rational, ExtValue)> = None;
    for &(t, succ) in edges {
        let tr = &g.transitions[t];
        let (a, b) = (&tr.window.0, &tr.window.1);
        let mut cands: Vec<Rational> = if urgent {
            if x < a || x > b {
                continue;
            }
            vec![x.clone()]
        } else {
            if x > b {
                continue;
            }
            let start = x.clone().max(a.clone());
            let mut c = vec![start.clone(), b.clone()];
            if !tr.reset {
                c.extend(succ.breakpoints().into_iter().filter(|p| p > &start && p < b));
            }
            c
        };
        cands.sort();
        cands.dedup();
        for s in cands {
            let landing = if tr.reset { &zero } else { &s };
            let v = succ.eval(landing)?.add_rational(&(rate * (&s - x) + Rational::from_int(tr.weight)));
            let better = match &best {
                None => true,
                Some((_, _, bv)) => player.prefers_ext(&v, bv),
            };
            if better {
                best = Some((t, s, v));
            }
        }
    }
    Ok(best)
}

/// Table for one location: sampled at every refinement point and between consecutive ones.
fn build_table(
    g: &ClosedGame,
    domain: (&Rational, &Rational),
    player: Opt,
    urgent: bool,
    rate: &Rational,
    edges: &[(usize, &Pwa)],
) -> Result<DecisionTable, PwaError> {
    let (lo, hi) = domain;
    let mut xs = vec![lo.clone(), hi.clone()];
    let mut parts = vec![];
    for &(t, succ) in edges {
        let tr = &g.transitions[t];
        xs.push(tr.window.0.clone());
        xs.push(tr.window.1.clone());
        xs.extend(succ.breakpoints());
        let part = succ.elapse_opt(&g.elapse_of(t), (lo, hi))?;
        xs.extend(part.breakpoints());
        parts.push(part);
    }
    if !parts.is_empty() {
        xs.extend(Pwa::pointwise_opt(&parts, player)?.breakpoints());
    }
    xs.retain(|x| x >= lo && x <= hi);
    xs.sort();
    xs.dedup();
    let mut entries: Vec<Entry> = vec![];
    let mut push = |e: Entry| {
        if let Some(last) = entries.last_mut() {
            if last.transition == e.transition && last.delay == e.delay && last.hi == e.lo && (last.hi_closed || e.lo_closed) {
                last.hi = e.hi;
                last.hi_closed = e.hi_closed;
                return;
            }
        }
        entries.push(e);
    };
    let delay_of = |s: Rational, x: &Rational| if &s == x { Delay::Now } else { Delay::Until(s) };
    for (k, x) in xs.iter().enumerate() {
        if let Some((t, s, _)) = decide_at(g, player, urgent, rate, edges, x)? {
            push(Entry { lo: x.clone(), hi: x.clone(), lo_closed: true, hi_closed: true, transition: t, delay: delay_of(s, x) });
        }
        if let Some(y) = xs.get(k + 1) {
            let m = x.midpoint(y);
            if let Some((t, s, _)) = decide_at(g, player, urgent, rate, edges, &m)? {
                push(Entry { lo: x.clone(), hi: y.clone(), lo_closed: false, hi_closed: false, transition: t, delay: delay_of(s, &m) });
            }
        }
    }
    Ok(DecisionTable { entries })
}

/// Chooses a delay and a closure transition at a location; told about every move.
pub trait Controller {
    fn choose(&mut self, g: &ClosedGame, loc: usize, v: &Rational) -> Option<(Rational, usize)>;

    fn observe(&mut self, _g: &ClosedGame, _transition: usize) {}

    fn restart(&mut self) {}
}

/// Memoryless: one table per closure location it controls.
#[derive(Clone, Debug, Default)]
pub struct MaxStrategy {
    pub tables: Vec<Option<DecisionTable>>,
}

impl MaxStrategy {
    pub fn to_json(&self, g: &ClosedGame) -> Value {
        let mut m = serde_json::Map::new();
        for (l, t) in self.tables.iter().enumerate() {
            if let Some(t) = t {
                m.insert(g.locations[l].id.clone(), t.to_json(g));
            }
        }
        Value::Object(m)
    }
}

impl Controller for MaxStrategy {
    fn choose(&mut self, _g: &ClosedGame, loc: usize, v: &Rational) -> Option<(Rational, usize)> {
        let e = self.tables.get(loc)?.as_ref()?.lookup(v)?;
        Some((e.delay.at(v), e.transition))
    }
}

/// Min's strategy towards the targets: the lowest transition into a lower rank, as early as possible.
#[derive(Clone, Debug, Default)]
pub struct AttractorStrategy {
    pub choice: Vec<Option<usize>>,
}

impl AttractorStrategy {
    pub fn new(g: &ClosedGame, attr: &Attractor) -> AttractorStrategy {
        let choice = (0..g.locations.len())
            .map(|l| {
                let r = attr.rank[l]?;
                if g.locations[l].owner != Owner::Min || r == 0 {
                    return None;
                }
                g.outgoing[l].iter().copied().find(|&t| attr.rank[g.transitions[t].to].is_some_and(|r2| r2 < r))
            })
            .collect();
        AttractorStrategy { choice }
    }

    pub fn choose_at(&self, g: &ClosedGame, loc: usize, v: &Rational) -> Option<(Rational, usize)> {
        let t = (*self.choice.get(loc)?)?;
        let a = &g.transitions[t].window.0;
        let d = if g.locations[loc].urgent || v >= a { Rational::zero() } else { a - v };
        Some((d, t))
    }
}

/// The first half of Min's switching strategy.
#[derive(Clone, Debug)]
pub enum Sigma1 {
    /// Choices at the nodes of an unfolding, followed along the play.
    Unfolding { tables: Vec<Option<DecisionTable>>, succ: Vec<Vec<(usize, usize)>>, leaf: Vec<bool> },
    /// Memoryless argmin of the value map.
    Memoryless { tables: Vec<Option<DecisionTable>> },
}

#[derive(Clone, Debug)]
pub struct MinSwitching {
    pub sigma1: Sigma1,
    pub sigma2: AttractorStrategy,
    pub threshold: usize,
    steps: usize,
    node: Option<usize>,
}

impl MinSwitching {
    pub fn new(sigma1: Sigma1, sigma2: AttractorStrategy, threshold: usize) -> MinSwitching {
        let node = matches!(sigma1, Sigma1::Unfolding { .. }).then_some(0);
        MinSwitching { sigma1, sigma2, threshold, steps: 0, node }
    }

    /// Whether the next choice is made by the attractor strategy.
    pub fn switched(&self) -> bool {
        self.steps >= self.threshold
            || match &self.sigma1 {
                Sigma1::Unfolding { leaf, .. } => self.node.is_none_or(|n| leaf[n]),
                Sigma1::Memoryless { .. } => false,
            }
    }

    pub fn to_json(&self, g: &ClosedGame) -> Value {
        let sigma1 = match &self.sigma1 {
            Sigma1::Unfolding { tables, .. } => json!({
                "kind": "unfolding",
                "nodes": tables.iter().enumerate().filter_map(|(n, t)| t.as_ref().map(|t| json!({"node": n, "table": t.to_json(g)}))).collect::<Vec<_>>(),
            }),
            Sigma1::Memoryless { tables } => json!({
                "kind": "memoryless",
                "locations": tables.iter().enumerate().filter_map(|(l, t)| t.as_ref().map(|t| (g.locations[l].id.clone(), t.to_json(g)))).collect::<serde_json::Map<_, _>>(),
            }),
        };
        let sigma2: serde_json::Map<String, Value> = self
            .sigma2
            .choice
            .iter()
            .enumerate()
            .filter_map(|(l, t)| t.map(|t| (g.locations[l].id.clone(), Value::String(g.transitions[t].id.clone()))))
            .collect();
        json!({"sigma1": sigma1, "sigma2": sigma2, "threshold": self.threshold})
    }
}

impl Controller for MinSwitching {
    fn choose(&mut self, g: &ClosedGame, loc: usize, v: &Rational) -> Option<(Rational, usize)> {
        if !self.switched() {
            let table = match &self.sigma1 {
                Sigma1::Unfolding { tables, .. } => tables[self.node?].as_ref(),
                Sigma1::Memoryless { tables } => tables[loc].as_ref(),
            };
            if let Some(e) = table.and_then(|t| t.lookup(v)) {
                return Some((e.delay.at(v), e.transition));
            }
        }
        self.sigma2.choose_at(g, loc, v)
    }

    fn observe(&mut self, _g: &ClosedGame, transition: usize) {
        self.steps += 1;
        if let Sigma1::Unfolding { succ, .. } = &self.sigma1 {
            self.node = self.node.and_then(|n| succ[n].iter().find(|(p, _)| *p == transition).map(|&(_, to)| to));
        }
    }

    fn restart(&mut self) {
        self.steps = 0;
        self.node = matches!(self.sigma1, Sigma1::Unfolding { .. }).then_some(0);
    }
}

fn location_table(g: &ClosedGame, values: &[Pwa], l: usize) -> Result<DecisionTable, PwaError> {
    let loc = &g.locations[l];
    let player = loc.owner.player().expect("non-target");
    let edges: Vec<(usize, &Pwa)> = g.outgoing[l].iter().map(|&t| (t, &values[g.transitions[t].to])).collect();
    build_table(g, loc.domain(), player, loc.urgent, &Rational::from_int(loc.effective_rate()), &edges)
}

/// Max's argmax table on every Max location in `scope`, and Min's switching pair.
///
/// `unfolding` is an unfolding of the root together with its backward-induction values; without
/// it, Min's first phase is the memoryless argmin of `values`.
pub fn extract_strategies(
    g: &ClosedGame,
    values: &[Pwa],
    scope: &[bool],
    attr: &Attractor,
    unfolding: Option<(&Unfolding, &[Pwa])>,
) -> Result<(MaxStrategy, MinSwitching), StrategyError> {
    let n = g.locations.len();
    for l in (0..n).filter(|&l| scope[l]) {
        if apply_f_at(g, values, l)? != values[l] {
            return Err(StrategyError::UncertifiedInput(g.locations[l].id.clone()));
        }
    }
    let mut max = MaxStrategy { tables: vec![None; n] };
    let mut min_tables = vec![None; n];
    for l in (0..n).filter(|&l| scope[l]) {
        match g.locations[l].owner {
            Owner::Max => max.tables[l] = Some(location_table(g, values, l)?),
            Owner::Min => min_tables[l] = Some(location_table(g, values, l)?),
            Owner::Target => {}
        }
    }
    let sigma2 = AttractorStrategy::new(g, attr);
    let resets = g.reset_transitions();
    let (sigma1, threshold) = match unfolding {
        Some((u, vals)) => {
            let mut tables = vec![None; u.nodes.len()];
            let mut succ = vec![vec![]; u.nodes.len()];
            let mut leaf = vec![false; u.nodes.len()];
            for i in 0..u.nodes.len() {
                leaf[i] = u.is_leaf(i);
                let mut es: Vec<(usize, usize)> = u.out[i].iter().map(|&e| (u.edges[e].proj, u.edges[e].to)).collect();
                es.sort();
                succ[i] = es.clone();
                if leaf[i] || u.owner(g, i) != Owner::Min {
                    continue;
                }
                let l = u.nodes[i].loc.expect("path node");
                let loc = &g.locations[l];
                let edges: Vec<(usize, &Pwa)> = es.iter().map(|&(p, to)| (p, &vals[to])).collect();
                let (lo, hi) = u.domain(g, i);
                tables[i] = Some(build_table(g, (&lo, &hi), Opt::Min, loc.urgent, &Rational::from_int(loc.effective_rate()), &edges)?);
            }
            (Sigma1::Unfolding { tables, succ, leaf }, u.path_bound(g))
        }
        None => (Sigma1::Memoryless { tables: min_tables }, (resets + 1) * n + resets),
    };
    Ok((max, MinSwitching::new(sigma1, sigma2, threshold)))
}
