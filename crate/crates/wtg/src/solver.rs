//! One-step operator, value iteration, attractor, backward solving of unfoldings, the
//! greatest-fixpoint certificate and the end-to-end pipeline.

use std::collections::VecDeque;

use serde::Serialize;

use crate::arith::{ExtValue, Inf, Rational};
use crate::error::PwaError;
use crate::game::{Owner, Wtg};
use crate::path::{cycle_value, FinitePath};
use crate::pwa::{Opt, Pwa};
use crate::region::{build_closure, ClosedGame, Region};
use crate::strategy::{extract_strategies, MaxStrategy, MinSwitching, StrategyError};
use crate::unfold::{build_unfolding, kappa_bound, saturating_usize, CycleCache, UnfoldError, Unfolding};

/// One function per closed location, over that location's domain.
pub type ValueMap = Vec<Pwa>;

/// Final weights on targets, `+inf` elsewhere.
pub fn initial_map(g: &ClosedGame) -> ValueMap {
    g.locations
        .iter()
        .map(|l| match &l.final_weight {
            Some(f) if l.is_target() => f.clone(),
            _ => Pwa::uniform_inf(l.lo.clone(), l.hi.clone(), Inf::Pos),
        })
        .collect()
}

/// The per-edge functions `ν -> opt_t (wt(δ) + t wt(q) + V(q', ν'))` for every edge out of `l`.
pub fn edge_values(g: &ClosedGame, v: &[Pwa], l: usize) -> Result<Vec<Pwa>, PwaError> {
    let loc = &g.locations[l];
    g.outgoing[l]
        .iter()
        .map(|&t| v[g.transitions[t].to].elapse_opt(&g.elapse_of(t), (&loc.lo, &loc.hi)))
        .collect()
}

pub fn apply_f_at(g: &ClosedGame, v: &[Pwa], l: usize) -> Result<Pwa, PwaError> {
    let loc = &g.locations[l];
    let Some(player) = loc.owner.player() else {
        return Ok(loc.final_weight.clone().expect("targets carry final weights"));
    };
    let parts = edge_values(g, v, l)?;
    if parts.is_empty() {
        return Ok(Pwa::uniform_inf(loc.lo.clone(), loc.hi.clone(), player.neutral()));
    }
    Pwa::pointwise_opt(&parts, player)
}

pub fn apply_f(g: &ClosedGame, v: &[Pwa]) -> Result<ValueMap, PwaError> {
    (0..g.locations.len()).map(|l| apply_f_at(g, v, l)).collect()
}

/// `max(W_loc, largest final-weight slope)`: every iterate is Lipschitz with this constant.
pub fn lipschitz_bound(g: &ClosedGame) -> Rational {
    let fin = g
        .locations
        .iter()
        .filter_map(|l| l.final_weight.as_ref())
        .filter_map(|f| f.max_slope().ok())
        .fold(Rational::zero(), Rational::max);
    Rational::from_int(g.w_loc).max(fin)
}

/// Largest slope over the finite entries of a value map.
pub fn map_max_slope(v: &[Pwa]) -> Rational {
    v.iter().filter_map(|f| f.max_slope().ok()).fold(Rational::zero(), Rational::max)
}

#[derive(Clone, Debug)]
pub struct Iteration {
    pub values: ValueMap,
    /// `max_slope` of `V_1, ..., V_H`.
    pub max_slopes: Vec<Rational>,
    /// First `i` with `V_{i+1} = V_i`, if reached within the horizon.
    pub stable_at: Option<usize>,
}

/// `V_H = F^H(V_0)`.
pub fn value_iterate(g: &ClosedGame, h: usize) -> Result<Iteration, PwaError> {
    let mut v = initial_map(g);
    let mut max_slopes = Vec::with_capacity(h);
    let mut stable_at = None;
    for i in 0..h {
        if stable_at.is_some() {
            max_slopes.push(map_max_slope(&v));
            continue;
        }
        let next = apply_f(g, &v)?;
        max_slopes.push(map_max_slope(&next));
        if next == v {
            stable_at = Some(i);
        }
        v = next;
    }
    Ok(Iteration { values: v, max_slopes, stable_at })
}

/// Iterates `V_0, V_1, ...` lazily.
pub struct Iterates<'g> {
    g: &'g ClosedGame,
    current: Option<ValueMap>,
}

pub fn iterates(g: &ClosedGame) -> Iterates<'_> {
    Iterates { g, current: None }
}

impl Iterator for Iterates<'_> {
    type Item = ValueMap;

    fn next(&mut self) -> Option<ValueMap> {
        let next = match &self.current {
            None => initial_map(self.g),
            Some(v) => apply_f(self.g, v).expect("closure edges are enabled on their whole source region"),
        };
        self.current = Some(next.clone());
        Some(next)
    }
}

/// Locations from which Min can force a target whose final weight is not `+inf`.
#[derive(Clone, Debug)]
pub struct Attractor {
    pub inside: Vec<bool>,
    /// Round at which a location entered; targets have rank 0.
    pub rank: Vec<Option<usize>>,
}

impl Attractor {
    pub fn len(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn attractor(g: &ClosedGame) -> Attractor {
    let n = g.locations.len();
    let mut rank: Vec<Option<usize>> = g
        .locations
        .iter()
        .map(|l| match &l.final_weight {
            Some(f) if l.is_target() && f.inf_sign() != Some(Inf::Pos) => Some(0),
            _ => None,
        })
        .collect();
    let mut round = 0;
    loop {
        round += 1;
        let mut added = vec![];
        for l in 0..n {
            if rank[l].is_some() || g.locations[l].is_target() {
                continue;
            }
            let outs = &g.outgoing[l];
            let inside = |t: &usize| rank[g.transitions[*t].to].is_some();
            let ok = match g.locations[l].owner {
                Owner::Min => outs.iter().any(inside),
                Owner::Max => !outs.is_empty() && outs.iter().all(inside),
                Owner::Target => false,
            };
            if ok {
                added.push(l);
            }
        }
        if added.is_empty() {
            break;
        }
        for l in added {
            rank[l] = Some(round);
        }
    }
    Attractor { inside: rank.iter().map(Option::is_some).collect(), rank }
}

/// Locations reachable from `root`, including `root`.
pub fn reachable(g: &ClosedGame, root: usize) -> Vec<bool> {
    let mut seen = vec![false; g.locations.len()];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(l) = queue.pop_front() {
        for &t in &g.outgoing[l] {
            let to = g.transitions[t].to;
            if !seen[to] {
                seen[to] = true;
                queue.push_back(to);
            }
        }
    }
    seen
}

/// Backward induction over an unfolding: leaves carry their final weights.
pub fn solve_acyclic(g: &ClosedGame, u: &Unfolding) -> Result<Vec<Pwa>, UnfoldError> {
    for e in &u.edges {
        if !(e.to > e.from || u.is_leaf(e.to)) {
            return Err(UnfoldError::CycleDetected);
        }
    }
    let n = u.nodes.len();
    let mut vals: Vec<Option<Pwa>> = (0..n).map(|i| u.is_leaf(i).then(|| u.leaf_value(g, i))).collect();
    for i in (0..n).rev() {
        if !u.is_leaf(i) {
            vals[i] = Some(node_value(g, u, i, |j| vals[j].as_ref())?);
        }
    }
    Ok(vals.into_iter().map(Option::unwrap).collect())
}

fn node_value<'a>(
    g: &ClosedGame,
    u: &Unfolding,
    i: usize,
    val: impl Fn(usize) -> Option<&'a Pwa>,
) -> Result<Pwa, UnfoldError> {
    let (lo, hi) = u.domain(g, i);
    let player = u.owner(g, i).player().expect("path node");
    let mut parts = Vec::with_capacity(u.out[i].len());
    for &e in &u.out[i] {
        let edge = &u.edges[e];
        let succ = val(edge.to).ok_or(UnfoldError::CycleDetected)?;
        parts.push(succ.elapse_opt(&g.elapse_of(edge.proj), (&lo, &hi))?);
    }
    if parts.is_empty() {
        return Ok(Pwa::uniform_inf(lo, hi, player.neutral()));
    }
    Ok(Pwa::pointwise_opt(&parts, player)?)
}

/// Plain value iteration run on an unfolding itself, `h` rounds from `+inf` off the leaves.
pub fn unfolding_iterate(g: &ClosedGame, u: &Unfolding, h: usize) -> Result<Vec<Pwa>, UnfoldError> {
    let mut v: Vec<Pwa> = (0..u.nodes.len())
        .map(|i| {
            if u.is_leaf(i) {
                u.leaf_value(g, i)
            } else {
                let (lo, hi) = u.domain(g, i);
                Pwa::uniform_inf(lo, hi, Inf::Pos)
            }
        })
        .collect();
    for _ in 0..h {
        let mut next = v.clone();
        for (i, slot) in next.iter_mut().enumerate() {
            if !u.is_leaf(i) {
                *slot = node_value(g, u, i, |j| Some(&v[j]))?;
            }
        }
        v = next;
    }
    Ok(v)
}

/// Length of the longest path from the root of an unfolding.
pub fn unfolding_depth(u: &Unfolding) -> usize {
    u.nodes.iter().map(|n| n.depth).max().unwrap_or(0) + 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    CertifiedExact,
    CertifiedWithin(Rational),
    Indeterminate,
}

impl Status {
    pub fn is_certified(&self) -> bool {
        !matches!(self, Status::Indeterminate)
    }

    pub fn label(&self) -> String {
        match self {
            Status::CertifiedExact => "CertifiedExact".into(),
            Status::CertifiedWithin(e) => format!("CertifiedWithin({e})"),
            Status::Indeterminate => "Indeterminate".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub status: Status,
    pub fixpoint: bool,
    /// Largest `|F(V̂) - V̂|`; `None` when some infinity does not match.
    pub residual: Option<Rational>,
    /// Largest `V_H - V̂` over finite entries; `None` when some `V_H` entry is still infinite there.
    pub gap: Option<Rational>,
    pub horizon: usize,
    /// `-inf` entries; each needs a witness.
    pub neg_inf: usize,
    pub unverified_neg_inf: Vec<String>,
}

/// Checks `V̂` against the greatest-fixpoint characterization on `scope`:
/// a fixpoint of `F` is a lower bound on the value and `V_H` is an upper bound.
pub fn certify(
    g: &ClosedGame,
    vhat: &[Pwa],
    h: usize,
    eps: &Rational,
    scope: Option<&[bool]>,
) -> Result<Certificate, PwaError> {
    let vh = value_iterate(g, h)?.values;
    certify_against(g, vhat, &vh, h, eps, scope)
}

pub fn certify_against(
    g: &ClosedGame,
    vhat: &[Pwa],
    vh: &[Pwa],
    h: usize,
    eps: &Rational,
    scope: Option<&[bool]>,
) -> Result<Certificate, PwaError> {
    let all = vec![true; g.locations.len()];
    let scope = scope.unwrap_or(&all);
    let mut fixpoint = true;
    let mut residual = Some(Rational::zero());
    let mut gap = Some(Rational::zero());
    let mut exact = true;
    let mut within = true;
    let mut neg_inf = 0;
    let mut neg_locs = vec![];
    for l in (0..g.locations.len()).filter(|&l| scope[l]) {
        let fv = apply_f_at(g, vhat, l)?;
        if fv != vhat[l] {
            fixpoint = false;
        }
        match (fv.max_abs_diff(&vhat[l])?, &residual) {
            (Some(d), Some(r)) => residual = Some(r.clone().max(d)),
            _ => residual = None,
        }
        match vhat[l].inf_sign() {
            Some(Inf::Neg) => {
                neg_inf += 1;
                neg_locs.push(l);
                continue;
            }
            Some(Inf::Pos) => continue,
            None => {}
        }
        if vh[l] != vhat[l] {
            exact = false;
        }
        if !vh[l].leq_within(&vhat[l], eps)? {
            within = false;
        }
        match (vh[l].max_abs_diff(&vhat[l])?, &gap) {
            (Some(d), Some(r)) => gap = Some(r.clone().max(d)),
            _ => gap = None,
        }
    }
    let mut unverified = vec![];
    if neg_inf > 0 {
        let witnessed = neg_inf_witness(g, vh);
        for l in neg_locs {
            if !witnessed[l] {
                unverified.push(g.locations[l].id.clone());
            }
        }
    }
    let status = if !fixpoint || !unverified.is_empty() {
        Status::Indeterminate
    } else if exact {
        Status::CertifiedExact
    } else if within {
        Status::CertifiedWithin(eps.clone())
    } else {
        Status::Indeterminate
    };
    Ok(Certificate { status, fixpoint, residual, gap, horizon: h, neg_inf, unverified_neg_inf: unverified })
}

const WITNESS_SEARCH_LIMIT: usize = 20_000;

/// Locations whose value is provably `-inf`.
///
/// Seeds are Min locations `(q, {0})` that start a cycle ending with a reset, with negative cycle
/// value, on which every Max location has a single outgoing transition, and from which `vh` is
/// finite, so Min can repeat the cycle and still leave for a target. The set is then closed under the Min attractor.
pub fn neg_inf_witness(g: &ClosedGame, vh: &[Pwa]) -> Vec<bool> {
    let n = g.locations.len();
    let zero = Rational::zero();
    let mut neg = vec![false; n];
    let max_len = n.min(12);
    let mut cache = std::collections::HashMap::new();
    // Max has no say on a cycle whose Max locations have a single way out; the cycle value
    // already accounts for the delays it picks there.
    let min_driven = |l: usize| match g.locations[l].owner {
        Owner::Min => true,
        Owner::Max => g.outgoing[l].len() == 1,
        Owner::Target => false,
    };
    for s in 0..n {
        let l = &g.locations[s];
        if l.owner != Owner::Min || l.lo != zero || l.hi != zero || !vh[s].is_finite() {
            continue;
        }
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(s, vec![])];
        let mut budget = WITNESS_SEARCH_LIMIT;
        'search: while let Some((at, path)) = stack.pop() {
            for &t in &g.outgoing[at] {
                if budget == 0 {
                    break 'search;
                }
                budget -= 1;
                let tr = &g.transitions[t];
                let mut p = path.clone();
                p.push(t);
                if tr.to == s && tr.reset {
                    let pi = FinitePath { start: s, transitions: p.clone() };
                    let v = cache.entry(p.clone()).or_insert_with(|| cycle_value(g, &pi).ok());
                    if matches!(v, Some(v) if *v < ExtValue::int(0)) {
                        neg[s] = true;
                        break 'search;
                    }
                    continue;
                }
                let visited = p.iter().any(|&u| g.transitions[u].from == tr.to);
                if p.len() < max_len && min_driven(tr.to) && !visited && tr.to != s {
                    stack.push((tr.to, p));
                }
            }
        }
    }
    loop {
        let mut changed = false;
        for l in 0..n {
            if neg[l] || g.locations[l].is_target() {
                continue;
            }
            let outs = &g.outgoing[l];
            let into = |t: &usize| neg[g.transitions[*t].to];
            let ok = match g.locations[l].owner {
                Owner::Min => outs.iter().any(into),
                Owner::Max => !outs.is_empty() && outs.iter().all(into),
                Owner::Target => false,
            };
            if ok {
                neg[l] = true;
                changed = true;
            }
        }
        if !changed {
            return neg;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KappaMode {
    Bound,
    Fixed(usize),
    Deepen { start: usize, max: usize },
}

impl KappaMode {
    fn schedule(&self, g: &ClosedGame) -> Vec<usize> {
        match self {
            KappaMode::Bound => vec![saturating_usize(&kappa_bound(g))],
            KappaMode::Fixed(k) => vec![*k],
            KappaMode::Deepen { start, max } => {
                let mut out = vec![];
                let mut k = (*start).max(1);
                while k <= *max {
                    out.push(k);
                    k *= 2;
                }
                out
            }
        }
    }
}

pub const DEFAULT_NODE_BUDGET: usize = 200_000;

/// Node cap for unfoldings: `WTG_NODE_BUDGET` if set, else [`DEFAULT_NODE_BUDGET`].
pub fn default_budget() -> usize {
    std::env::var("WTG_NODE_BUDGET").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_NODE_BUDGET)
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub kappa: KappaMode,
    pub horizon: usize,
    pub epsilon: Rational,
    pub budget: usize,
    /// Try exact candidates rebuilt from the iterates when the unfolding does not certify.
    pub reconstruct: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            kappa: KappaMode::Deepen { start: 2, max: 8 },
            horizon: 200,
            epsilon: Rational::new(1, 100),
            budget: default_budget(),
            reconstruct: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Source {
    /// The root lies outside the attractor.
    Attractor,
    Unfolding,
    /// An iterate that is already a fixpoint.
    StableIterate,
    /// Simplest-fraction rounding of an iterate.
    Reconstruction,
    /// Nothing certified; the value shown is the upper bound `V_H`.
    UpperBound,
}

#[derive(Clone, Debug, Serialize)]
pub struct Round {
    pub kappa: usize,
    pub nodes: usize,
    pub status: String,
    pub root_value_at_lo: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub source: Source,
    pub closure_locations: usize,
    pub closure_transitions: usize,
    pub attractor_size: usize,
    pub scope_size: usize,
    pub rounds: Vec<Round>,
    pub budget_exceeded: bool,
    pub certificate: Option<Certificate>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub closure: ClosedGame,
    pub root: usize,
    pub value: Pwa,
    pub status: Status,
    pub values: ValueMap,
    pub scope: Vec<bool>,
    pub strategies: Option<(MaxStrategy, MinSwitching)>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("`{0}` is not a region of this game")]
    UnknownRegion(String),
    #[error(transparent)]
    Pwa(#[from] PwaError),
    #[error(transparent)]
    Unfold(#[from] UnfoldError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// Rounds every breakpoint of `f` to the simplest rational within `tol`, keeping the domain ends.
pub fn snap(f: &Pwa, tol: &Rational) -> Option<Pwa> {
    let Some(pts) = f.points() else {
        return Some(f.clone());
    };
    let (lo, hi) = (f.lo(), f.hi());
    let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(pts.len());
    for (k, (x, y)) in pts.iter().enumerate() {
        let x2 = if k == 0 || k == pts.len() - 1 {
            x.clone()
        } else {
            Rational::simplest_between(&(x - tol), &(x + tol))
        };
        let y2 = Rational::simplest_between(&(y - tol), &(y + tol));
        if k != pts.len() - 1 && (&x2 <= lo || &x2 >= hi) {
            if k == 0 {
                out.push((x2, y2));
            }
            continue;
        }
        if let Some(last) = out.last() {
            if last.0 >= x2 {
                continue;
            }
        }
        out.push((x2, y2));
    }
    Pwa::from_points(out).ok()
}

fn fill_candidate(
    g: &ClosedGame,
    base: &[Pwa],
    scope: &[bool],
    core: &[bool],
    mut value: impl FnMut(usize) -> Option<Pwa>,
) -> Option<ValueMap> {
    let mut v = base.to_vec();
    for l in 0..g.locations.len() {
        if !scope[l] {
            continue;
        }
        let loc = &g.locations[l];
        v[l] = if loc.is_target() {
            loc.final_weight.clone().unwrap()
        } else if !core[l] {
            Pwa::uniform_inf(loc.lo.clone(), loc.hi.clone(), Inf::Pos)
        } else {
            value(l)?
        };
    }
    Some(v)
}

/// The pipeline: closure, attractor, unfolding with deepening κ, certificate, and the
/// iterate-based candidates when the unfolding alone does not certify.
pub fn solve(g: &Wtg, q: &str, region: &Region, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let base = g.location(q).ok_or_else(|| SolveError::UnknownLocation(q.to_string()))?;
    let closure = build_closure(g);
    let ri = closure
        .regions
        .iter()
        .position(|r| r == region)
        .ok_or_else(|| SolveError::UnknownRegion(region.to_string()))?;
    let root = closure.at(base, ri);
    solve_closure(closure, root, opts)
}

pub fn solve_closure(closure: ClosedGame, root: usize, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let g = &closure;
    let attr = attractor(g);
    let scope = reachable(g, root);
    let mut diag = Diagnostics {
        source: Source::UpperBound,
        closure_locations: g.locations.len(),
        closure_transitions: g.transitions.len(),
        attractor_size: attr.len(),
        scope_size: scope.iter().filter(|&&b| b).count(),
        rounds: vec![],
        budget_exceeded: false,
        certificate: None,
        notes: vec![],
    };
    let rl = &g.locations[root];
    if rl.is_target() || !attr.inside[root] {
        let value = if rl.is_target() {
            rl.final_weight.clone().unwrap()
        } else {
            Pwa::uniform_inf(rl.lo.clone(), rl.hi.clone(), Inf::Pos)
        };
        diag.source = Source::Attractor;
        let mut values = initial_map(g);
        values[root] = value.clone();
        return Ok(SolveResult {
            root,
            value,
            status: Status::CertifiedExact,
            values,
            scope,
            strategies: None,
            diagnostics: diag,
            closure,
        });
    }

    let checkpoints: Vec<usize> = (0..).map(|k| 8usize << k).take_while(|&h| h < opts.horizon).collect();
    let mut snapshots: Vec<(usize, ValueMap)> = vec![];
    let mut vh = initial_map(g);
    let mut stable: Option<usize> = None;
    for i in 1..=opts.horizon {
        let next = apply_f(g, &vh)?;
        let done = next == vh;
        vh = next;
        if done {
            stable = Some(i - 1);
            break;
        }
        if checkpoints.contains(&i) {
            snapshots.push((i, vh.clone()));
        }
    }

    let mut cycles = CycleCache::default();
    let mut best: Option<(ValueMap, Certificate, Source)> = None;
    let mut root_unfolding: Option<(Unfolding, Vec<Pwa>)> = None;

    'rounds: for kappa in opts.kappa.schedule(g) {
        let mut roots: Vec<Option<Pwa>> = vec![None; g.locations.len()];
        let mut nodes = 0;
        let mut this_root = None;
        for l in 0..g.locations.len() {
            if !scope[l] || !attr.inside[l] || g.locations[l].is_target() {
                continue;
            }
            let u = match build_unfolding(g, l, kappa, opts.budget, &attr.inside, &mut cycles) {
                Ok(u) => u,
                Err(UnfoldError::BudgetExceeded { stats, .. }) => {
                    diag.budget_exceeded = true;
                    diag.notes.push(format!("unfolding budget exceeded at κ = {kappa} after {} nodes", stats.nodes));
                    break 'rounds;
                }
                Err(e) => return Err(e.into()),
            };
            nodes += u.nodes.len();
            let vals = solve_acyclic(g, &u)?;
            roots[l] = Some(vals[0].clone());
            if l == root {
                this_root = Some((u, vals));
            }
        }
        let cand = fill_candidate(g, &vh, &scope, &attr.inside, |l| roots[l].clone()).expect("all in-scope roots solved");
        let cert = certify_against(g, &cand, &vh, opts.horizon, &opts.epsilon, Some(&scope))?;
        diag.rounds.push(Round {
            kappa,
            nodes,
            status: cert.status.label(),
            root_value_at_lo: cand[root].eval(&g.locations[root].lo)?.to_string(),
        });
        let certified = cert.status.is_certified();
        best = Some((cand, cert, Source::Unfolding));
        root_unfolding = this_root;
        if certified {
            break;
        }
    }

    let unfolding_certified = best.as_ref().is_some_and(|b| b.1.status.is_certified());
    if !unfolding_certified && opts.reconstruct {
        let mut found = None;
        if stable.is_some() {
            let cert = certify_against(g, &vh, &vh, opts.horizon, &opts.epsilon, Some(&scope))?;
            if cert.status.is_certified() {
                found = Some((vh.clone(), cert, Source::StableIterate));
            }
        }
        let tols: Vec<Rational> = [3u32, 6, 9, 12].iter().map(|&k| Rational::new(1, 10i64.pow(k))).collect();
        'outer: for (_, snap_map) in snapshots.iter().chain(std::iter::once(&(opts.horizon, vh.clone()))) {
            if found.is_some() {
                break;
            }
            for tol in &tols {
                let Some(cand) = fill_candidate(g, &vh, &scope, &attr.inside, |l| snap(&snap_map[l], tol)) else {
                    continue;
                };
                let cert = certify_against(g, &cand, &vh, opts.horizon, &opts.epsilon, Some(&scope))?;
                if cert.status.is_certified() {
                    found = Some((cand, cert, Source::Reconstruction));
                    break 'outer;
                }
            }
        }
        if let Some(f) = found {
            if best.is_some() {
                diag.notes.push("unfolding candidate failed the fixpoint check; certified an iterate-based candidate instead".into());
            }
            best = Some(f);
            root_unfolding = None;
        }
    }

    let (values, cert, source) = match best {
        Some(b) if b.1.status.is_certified() => b,
        other => {
            if let Some((_, c, _)) = &other {
                diag.notes.push(format!("best candidate not certified (fixpoint: {})", c.fixpoint));
            }
            let cert = certify_against(g, &vh, &vh, opts.horizon, &opts.epsilon, Some(&scope))?;
            (vh.clone(), Certificate { status: Status::Indeterminate, ..cert }, Source::UpperBound)
        }
    };
    diag.source = source;
    let status = cert.status.clone();
    diag.certificate = Some(cert);
    let strategies = if status.is_certified() {
        Some(extract_strategies(g, &values, &scope, &attr, root_unfolding.as_ref().map(|(u, v)| (u, v.as_slice())))?)
    } else {
        None
    };
    Ok(SolveResult {
        root,
        value: values[root].clone(),
        status,
        values,
        scope,
        strategies,
        diagnostics: diag,
        closure,
    })
}

/// Player owning a location, for callers that only need the optimization side.
pub fn player_of(g: &ClosedGame, l: usize) -> Option<Opt> {
    g.locations[l].owner.player()
}
