//! Regions of the clock line and the closure game built over them.

use std::collections::HashMap;
use std::fmt;

use serde_json::Value;

use crate::arith::Rational;
use crate::game::{Owner, Wtg};
use crate::pwa::{Elapse, Opt, Pwa};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Point(Rational),
    Open(Rational, Rational),
}

impl Region {
    /// Topological closure as a closed interval.
    pub fn closure(&self) -> (Rational, Rational) {
        match self {
            Region::Point(p) => (p.clone(), p.clone()),
            Region::Open(a, b) => (a.clone(), b.clone()),
        }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        match self {
            Region::Point(p) => p == x,
            Region::Open(a, b) => a < x && x < b,
        }
    }

    pub fn inf(&self) -> &Rational {
        match self {
            Region::Point(p) | Region::Open(p, _) => p,
        }
    }

    /// Label used in closure location ids: `{a}` for points, `[a,b]` for the closed domain of `(a,b)`.
    pub fn domain_label(&self) -> String {
        match self {
            Region::Point(p) => format!("{{{p}}}"),
            Region::Open(a, b) => format!("[{a},{b}]"),
        }
    }

    /// Parses `point:a`, `open:a,b`, `{a}` or `(a,b)`.
    pub fn parse(s: &str) -> Option<Region> {
        let s = s.trim();
        if let Some(p) = s.strip_prefix("point:") {
            return p.parse().ok().map(Region::Point);
        }
        if let Some(p) = s.strip_prefix("open:") {
            let (a, b) = p.split_once(',')?;
            return Some(Region::Open(a.parse().ok()?, b.parse().ok()?));
        }
        if let Some(p) = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            return p.parse().ok().map(Region::Point);
        }
        if let Some(p) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let (a, b) = p.split_once(',')?;
            return Some(Region::Open(a.parse().ok()?, b.parse().ok()?));
        }
        None
    }

    pub fn to_json(&self) -> Value {
        match self {
            Region::Point(p) => serde_json::json!({"kind": "point", "at": p.to_string()}),
            Region::Open(a, b) => {
                serde_json::json!({"kind": "open", "lo": a.to_string(), "hi": b.to_string()})
            }
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Point(p) => write!(f, "{{{p}}}"),
            Region::Open(a, b) => write!(f, "({a},{b})"),
        }
    }
}

/// Points and open intervals cut by `0`, `M` and every guard endpoint, in increasing order.
pub fn compute_regions(g: &Wtg) -> Vec<Region> {
    let m = g.m();
    let zero = Rational::zero();
    let mut cuts = vec![zero.clone(), m.clone()];
    for t in &g.transitions {
        for e in [&t.guard.lo, &t.guard.hi] {
            if e >= &zero && e <= &m {
                cuts.push(e.clone());
            }
        }
    }
    cuts.sort();
    cuts.dedup();
    let mut out = Vec::with_capacity(2 * cuts.len());
    for (i, c) in cuts.iter().enumerate() {
        out.push(Region::Point(c.clone()));
        if let Some(next) = cuts.get(i + 1) {
            out.push(Region::Open(c.clone(), next.clone()));
        }
    }
    out
}

pub fn region_of(regions: &[Region], x: &Rational) -> Option<usize> {
    regions.iter().position(|r| r.contains(x))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedLocation {
    pub id: String,
    pub base: usize,
    /// Index into the region list; `None` for a location lifted without region splitting.
    pub region: Option<usize>,
    pub owner: Owner,
    pub rate: i64,
    pub urgent: bool,
    pub lo: Rational,
    pub hi: Rational,
    pub final_weight: Option<Pwa>,
}

impl ClosedLocation {
    pub fn domain(&self) -> (&Rational, &Rational) {
        (&self.lo, &self.hi)
    }

    pub fn is_target(&self) -> bool {
        self.owner == Owner::Target
    }

    /// Rate actually paid while waiting.
    pub fn effective_rate(&self) -> i64 {
        if self.urgent {
            0
        } else {
            self.rate
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedTransition {
    pub id: String,
    pub base: usize,
    pub from: usize,
    pub to: usize,
    /// Closed guard `[a, b]`.
    pub window: (Rational, Rational),
    pub reset: bool,
    pub weight: i64,
}

/// A game whose guards are closed intervals and whose locations carry closed valuation domains.
///
/// The closure game is the main instance; [`ClosedGame::lift`] gives the same view of a base game
/// with its guards closed and every location spanning `[0, M]`.
#[derive(Clone, Debug)]
pub struct ClosedGame {
    pub clock_bound: i64,
    pub regions: Vec<Region>,
    pub locations: Vec<ClosedLocation>,
    pub transitions: Vec<ClosedTransition>,
    pub outgoing: Vec<Vec<usize>>,
    /// For each base location, its closed locations indexed by region (closure only).
    pub by_base: Vec<Vec<usize>>,
    pub w_loc: i64,
    pub w_tr: i64,
    pub w_fin: Rational,
    loc_index: HashMap<String, usize>,
    trans_index: HashMap<String, usize>,
}

fn extend_final(f: &Pwa, lo: &Rational, hi: &Rational) -> Pwa {
    // Final weights are continuous on [0, M], so restriction is the continuous extension.
    f.restrict(lo, hi).expect("region inside [0, M]")
}

impl ClosedGame {
    fn finish(
        g: &Wtg,
        regions: Vec<Region>,
        locations: Vec<ClosedLocation>,
        transitions: Vec<ClosedTransition>,
        by_base: Vec<Vec<usize>>,
    ) -> ClosedGame {
        let mut outgoing = vec![Vec::new(); locations.len()];
        for (i, t) in transitions.iter().enumerate() {
            outgoing[t.from].push(i);
        }
        let loc_index = locations.iter().enumerate().map(|(i, l)| (l.id.clone(), i)).collect();
        let trans_index = transitions.iter().enumerate().map(|(i, t)| (t.id.clone(), i)).collect();
        ClosedGame {
            clock_bound: g.clock_bound,
            regions,
            locations,
            transitions,
            outgoing,
            by_base,
            w_loc: g.w_loc(),
            w_tr: g.w_tr(),
            w_fin: g.w_fin(),
            loc_index,
            trans_index,
        }
    }

    /// The base game with closed guards, one location per base location on `[0, M]`.
    pub fn lift(g: &Wtg) -> ClosedGame {
        let m = g.m();
        let locations = g
            .locations
            .iter()
            .enumerate()
            .map(|(i, l)| ClosedLocation {
                id: l.id.clone(),
                base: i,
                region: None,
                owner: l.owner,
                rate: l.rate,
                urgent: l.urgent,
                lo: Rational::zero(),
                hi: m.clone(),
                final_weight: l.final_weight.clone(),
            })
            .collect();
        let transitions = g
            .transitions
            .iter()
            .enumerate()
            .map(|(i, t)| ClosedTransition {
                id: t.id.clone(),
                base: i,
                from: t.from,
                to: t.to,
                window: t.guard.closure(),
                reset: t.reset,
                weight: t.weight,
            })
            .collect();
        let by_base = (0..g.locations.len()).map(|i| vec![i]).collect();
        ClosedGame::finish(g, vec![], locations, transitions, by_base)
    }

    pub fn location(&self, id: &str) -> Option<usize> {
        self.loc_index.get(id).copied()
    }

    pub fn transition(&self, id: &str) -> Option<usize> {
        self.trans_index.get(id).copied()
    }

    pub fn m(&self) -> Rational {
        Rational::from_int(self.clock_bound)
    }

    /// Closure location `(q, r)`.
    pub fn at(&self, base: usize, region: usize) -> usize {
        self.by_base[base][region]
    }

    /// Closure location holding `(q, ν)`.
    pub fn locate(&self, base: usize, x: &Rational) -> Option<usize> {
        if self.regions.is_empty() {
            return Some(self.by_base[base][0]);
        }
        region_of(&self.regions, x).map(|r| self.at(base, r))
    }

    pub fn reset_transitions(&self) -> usize {
        self.transitions.iter().filter(|t| t.reset).count()
    }

    /// Optimization parameters for taking `tr` from its source.
    pub fn elapse_of(&self, tr: usize) -> Elapse {
        let t = &self.transitions[tr];
        let src = &self.locations[t.from];
        Elapse {
            rate: Rational::from_int(src.effective_rate()),
            addend: Rational::from_int(t.weight),
            window: t.window.clone(),
            player: src.owner.player().unwrap_or(Opt::Min),
            reset: t.reset,
            urgent: src.urgent,
        }
    }

    /// The closed game as a game file: locations named `q@{a}` or `q@[a,b]`, closed guards.
    pub fn to_json(&self) -> Value {
        let locations: Vec<Value> = self
            .locations
            .iter()
            .map(|l| {
                let mut o = serde_json::json!({
                    "id": l.id,
                    "owner": match l.owner { Owner::Min => "min", Owner::Max => "max", Owner::Target => "target" },
                    "rate": l.rate,
                    "urgent": l.urgent,
                    "domain": [l.lo.to_string(), l.hi.to_string()],
                });
                if let Some(f) = &l.final_weight {
                    o["final"] = f.to_json();
                }
                o
            })
            .collect();
        let transitions: Vec<Value> = self
            .transitions
            .iter()
            .map(|t| {
                serde_json::json!({
                    "id": t.id,
                    "from": self.locations[t.from].id,
                    "to": self.locations[t.to].id,
                    "guard": {"lo": t.window.0.to_string(), "hi": t.window.1.to_string(), "lo_closed": true, "hi_closed": true},
                    "reset": t.reset,
                    "weight": t.weight,
                })
            })
            .collect();
        serde_json::json!({
            "clock_bound": self.clock_bound,
            "locations": locations,
            "transitions": transitions,
        })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph closure {\n");
        for (i, l) in self.locations.iter().enumerate() {
            let shape = match l.owner {
                Owner::Min => "circle",
                Owner::Max => "box",
                Owner::Target => "doublecircle",
            };
            s.push_str(&format!("  n{i} [label=\"{}\", shape={shape}];\n", l.id));
        }
        for t in &self.transitions {
            s.push_str(&format!(
                "  n{} -> n{} [label=\"{} [{},{}]{} w={}\"];\n",
                t.from,
                t.to,
                self.transition_label(t),
                t.window.0,
                t.window.1,
                if t.reset { " x:=0" } else { "" },
                t.weight
            ));
        }
        s.push_str("}\n");
        s
    }

    fn transition_label(&self, t: &ClosedTransition) -> String {
        t.id.split('@').next().unwrap_or(&t.id).to_string()
    }
}

/// Closure game: one location per (location, region), closed guards, zero-delay moves included.
///
/// From region `I` a transition may fire in any region `I''` met by its guard with `I''` equal
/// to `I` or later in region order; urgent sources only keep `I'' = I`. Each region lies wholly
/// inside or outside every guard, so the closed guard is simply the closure of `I''`. A reset
/// transition lands in `{0}` whatever `I''` is, and its choices of `I''` are merged into one
/// transition whose guard is the closure of their union.
pub fn build_closure(g: &Wtg) -> ClosedGame {
    let regions = compute_regions(g);
    let mut locations = Vec::new();
    let mut by_base = Vec::with_capacity(g.locations.len());
    for (qi, l) in g.locations.iter().enumerate() {
        let mut row = Vec::with_capacity(regions.len());
        for (ri, r) in regions.iter().enumerate() {
            let (lo, hi) = r.closure();
            row.push(locations.len());
            locations.push(ClosedLocation {
                id: format!("{}@{}", l.id, r.domain_label()),
                base: qi,
                region: Some(ri),
                owner: l.owner,
                rate: l.rate,
                urgent: l.urgent,
                final_weight: l.final_weight.as_ref().map(|f| extend_final(f, &lo, &hi)),
                lo,
                hi,
            });
        }
        by_base.push(row);
    }
    let zero_region = 0;
    let mut transitions = Vec::new();
    for (ti, t) in g.transitions.iter().enumerate() {
        let src = &g.locations[t.from];
        if src.owner == Owner::Target {
            continue;
        }
        for (ri, r) in regions.iter().enumerate() {
            let met: Vec<usize> = (ri..regions.len())
                .take_while(|&rj| !src.urgent || rj == ri)
                .filter(|&rj| t.guard.meets(&regions[rj]))
                .collect();
            if t.reset {
                // Every landing region leads to the same successor, so one transition covers them.
                let (Some(&first), Some(&last)) = (met.first(), met.last()) else { continue };
                let window = (regions[first].closure().0, regions[last].closure().1);
                let label = if first == last {
                    regions[first].to_string()
                } else {
                    format!("[{},{}]", window.0, window.1)
                };
                transitions.push(ClosedTransition {
                    id: format!("{}@{}>{}", t.id, r, label),
                    base: ti,
                    from: by_base[t.from][ri],
                    to: by_base[t.to][zero_region],
                    window,
                    reset: true,
                    weight: t.weight,
                });
                continue;
            }
            for rj in met {
                let r2 = &regions[rj];
                transitions.push(ClosedTransition {
                    id: format!("{}@{}>{}", t.id, r, r2),
                    base: ti,
                    from: by_base[t.from][ri],
                    to: by_base[t.to][rj],
                    window: r2.closure(),
                    reset: false,
                    weight: t.weight,
                });
            }
        }
    }
    ClosedGame::finish(g, regions, locations, transitions, by_base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    #[test]
    fn parse_region_syntax() {
        assert_eq!(Region::parse("point:0"), Some(Region::Point(q("0"))));
        assert_eq!(Region::parse("open:0,1"), Some(Region::Open(q("0"), q("1"))));
        assert_eq!(Region::parse("(1,2)"), Some(Region::Open(q("1"), q("2"))));
        assert_eq!(Region::parse("{2}"), Some(Region::Point(q("2"))));
        assert_eq!(Region::parse("2"), None);
    }

    #[test]
    fn labels() {
        assert_eq!(Region::Open(q("0"), q("1")).domain_label(), "[0,1]");
        assert_eq!(Region::Point(q("1")).to_string(), "{1}");
    }
}
