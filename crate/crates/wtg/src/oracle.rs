//! Independent checks: a brute-force value on a time grid, a play simulator driven by
//! controllers, and a seeded random-game generator.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::arith::{ExtValue, Rational};
use crate::game::{Configuration, Guard, Location, MoveRule, Owner, Payoff, Play, Transition, Wtg};
use crate::pwa::Pwa;
use crate::region::ClosedGame;
use crate::strategy::Controller;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("start valuation {0} is not a multiple of 1/{1}")]
    OffGridStart(String, u64),
    #[error("grid resolution must be positive")]
    ZeroResolution,
    #[error("no strategy decision at step {step} in `{location}`")]
    StrategyUndefined { step: usize, location: String },
    #[error("illegal move at step {step}: {rule:?}")]
    IllegalMove { step: usize, rule: MoveRule },
    #[error("unsatisfiable parameters: {0}")]
    UnsatisfiableParams(String),
}

/// Delays restricted to multiples of `1/d`; `h` steps of backward induction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub d: u64,
    pub h: usize,
}

/// `V_H` restricted to grid moves, an upper bound on the value for Min-side rounding.
pub fn grid_value(g: &Wtg, c: &Configuration, spec: GridSpec) -> Result<ExtValue, OracleError> {
    Ok(grid_table(g, spec)?.at(c)?)
}

/// Grid values of every configuration `(q, k/d)`.
pub struct GridTable {
    pub d: u64,
    pub values: Vec<Vec<ExtValue>>,
}

impl GridTable {
    pub fn at(&self, c: &Configuration) -> Result<ExtValue, OracleError> {
        let scaled = &c.valuation * Rational::from_int(self.d as i64);
        if !scaled.is_integer() {
            return Err(OracleError::OffGridStart(c.valuation.to_string(), self.d));
        }
        let k = scaled.to_i64().expect("small grid index") as usize;
        Ok(self.values[c.location][k].clone())
    }
}

pub fn grid_table(g: &Wtg, spec: GridSpec) -> Result<GridTable, OracleError> {
    if spec.d == 0 {
        return Err(OracleError::ZeroResolution);
    }
    let d = spec.d as i64;
    let n = (g.clock_bound * d) as usize;
    let x = |k: usize| Rational::new(k as i64, d);
    let init: Vec<Vec<ExtValue>> = g
        .locations
        .iter()
        .map(|l| match (&l.owner, &l.final_weight) {
            (Owner::Target, Some(f)) => (0..=n).map(|k| f.eval(&x(k)).expect("final weight on [0, M]")).collect(),
            _ => vec![ExtValue::PosInf; n + 1],
        })
        .collect();
    let enabled: Vec<Vec<bool>> = g.transitions.iter().map(|t| (0..=n).map(|k| t.guard.contains(&x(k))).collect()).collect();
    let mut v = init;
    for _ in 0..spec.h {
        let mut next = v.clone();
        for (q, l) in g.locations.iter().enumerate() {
            let Some(player) = l.owner.player() else { continue };
            let rate = if l.urgent { 0 } else { l.rate };
            for k in 0..=n {
                let mut best = player.neutral().value();
                for ti in g.outgoing(q) {
                    let t = &g.transitions[ti];
                    let last = if l.urgent { k } else { n };
                    for k2 in k..=last {
                        if !enabled[ti][k2] {
                            continue;
                        }
                        let land = if t.reset { 0 } else { k2 };
                        let w = Rational::new(rate * (k2 - k) as i64, d) + Rational::from_int(t.weight);
                        let val = v[t.to][land].add_rational(&w);
                        if player.prefers_ext(&val, &best) {
                            best = val;
                        }
                    }
                }
                next[q][k] = best;
            }
        }
        v = next;
    }
    Ok(GridTable { d: spec.d, values: v })
}

/// One move of a simulated play on a closure game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimStep {
    pub location: usize,
    pub valuation: Rational,
    pub delay: Rational,
    pub transition: usize,
    /// Weight accumulated before this move.
    pub weight_before: Rational,
}

#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub start: (usize, Rational),
    pub steps: Vec<SimStep>,
    pub end: (usize, Rational),
    pub weight: Rational,
    pub payoff: Payoff,
}

impl SimOutcome {
    /// Segments between two visits of the same configuration whose weight is negative.
    pub fn negative_cycles(&self) -> Vec<(usize, usize, Rational)> {
        let mut seen: HashMap<(usize, Rational), Vec<(usize, Rational)>> = HashMap::new();
        let mut out = vec![];
        let visits = self
            .steps
            .iter()
            .map(|s| ((s.location, s.valuation.clone()), s.weight_before.clone()))
            .chain(std::iter::once((self.end.clone(), self.weight.clone())));
        for (j, (conf, w)) in visits.enumerate() {
            let earlier = seen.entry(conf).or_default();
            for (i, wi) in earlier.iter() {
                let seg = &w - wi;
                if seg.is_negative() {
                    out.push((*i, j, seg));
                }
            }
            earlier.push((j, w));
        }
        out
    }

    /// The same play in the base game.
    pub fn to_base_play(&self, g: &ClosedGame) -> Play {
        Play {
            start: Configuration { location: g.locations[self.start.0].base, valuation: self.start.1.clone() },
            steps: self.steps.iter().map(|s| (s.delay.clone(), g.transitions[s.transition].base)).collect(),
        }
    }

    pub fn to_json(&self, g: &ClosedGame) -> Value {
        json!({
            "start": {"location": g.locations[self.start.0].id, "valuation": self.start.1.to_string()},
            "steps": self.steps.iter().map(|s| json!({
                "location": g.locations[s.location].id,
                "valuation": s.valuation.to_string(),
                "delay": s.delay.to_string(),
                "transition": g.transitions[s.transition].id,
            })).collect::<Vec<_>>(),
            "end": {"location": g.locations[self.end.0].id, "valuation": self.end.1.to_string()},
            "weight": self.weight.to_string(),
            "complete": matches!(self.payoff, Payoff::Complete(_)),
            "payoff": self.payoff.value().to_string(),
        })
    }
}

/// Plays `min` against `max` from `(loc, v)` for at most `max_steps` moves.
pub fn simulate(
    g: &ClosedGame,
    loc: usize,
    v: &Rational,
    min: &mut dyn Controller,
    max: &mut dyn Controller,
    max_steps: usize,
) -> Result<SimOutcome, OracleError> {
    let (mut at, mut x) = (loc, v.clone());
    let mut weight = Rational::zero();
    let mut steps = vec![];
    for step in 0..max_steps {
        let l = &g.locations[at];
        let choice = match l.owner {
            Owner::Target => break,
            Owner::Min => min.choose(g, at, &x),
            Owner::Max => max.choose(g, at, &x),
        };
        let (delay, t) = choice
            .ok_or_else(|| OracleError::StrategyUndefined { step, location: l.id.clone() })?;
        let tr = g.transitions.get(t).ok_or(OracleError::IllegalMove { step, rule: MoveRule::UnknownTransition })?;
        let rule = if tr.from != at {
            Some(MoveRule::WrongSource)
        } else if delay.is_negative() {
            Some(MoveRule::NegativeDelay)
        } else if l.urgent && !delay.is_zero() {
            Some(MoveRule::UrgentDelay)
        } else {
            let s = &x + &delay;
            (s < tr.window.0 || s > tr.window.1).then_some(MoveRule::GuardViolated)
        };
        if let Some(rule) = rule {
            return Err(OracleError::IllegalMove { step, rule });
        }
        steps.push(SimStep { location: at, valuation: x.clone(), delay: delay.clone(), transition: t, weight_before: weight.clone() });
        weight = weight + Rational::from_int(l.effective_rate()) * &delay + Rational::from_int(tr.weight);
        x = if tr.reset { Rational::zero() } else { &x + &delay };
        at = tr.to;
        min.observe(g, t);
        max.observe(g, t);
    }
    let end = &g.locations[at];
    let payoff = match &end.final_weight {
        Some(f) if end.is_target() => Payoff::Complete(f.eval(&x).expect("landing inside the target domain").add_rational(&weight)),
        _ => Payoff::Partial(weight.clone()),
    };
    Ok(SimOutcome { start: (loc, v.clone()), steps, end: (at, x), weight, payoff })
}

/// Uniformly random transition; landing date at the earliest, the latest, or on a `1/den` grid.
pub struct RandomController {
    rng: ChaCha8Rng,
    den: i64,
}

impl RandomController {
    pub fn new(seed: u64, den: i64) -> RandomController {
        RandomController { rng: ChaCha8Rng::seed_from_u64(seed), den: den.max(1) }
    }
}

impl Controller for RandomController {
    fn choose(&mut self, g: &ClosedGame, loc: usize, v: &Rational) -> Option<(Rational, usize)> {
        let outs = &g.outgoing[loc];
        if outs.is_empty() {
            return None;
        }
        let t = outs[self.rng.gen_range(0..outs.len())];
        if g.locations[loc].urgent {
            return Some((Rational::zero(), t));
        }
        let (a, b) = &g.transitions[t].window;
        let start = v.clone().max(a.clone());
        let s = match self.rng.gen_range(0..3) {
            0 => start.clone(),
            1 => b.clone(),
            _ => {
                let den = Rational::from_int(self.den);
                let first = (&start * &den).ceil().to_i64().unwrap_or(0);
                let last = (b * &den).floor().to_i64().unwrap_or(0);
                if first > last {
                    start.clone()
                } else {
                    Rational::new(self.rng.gen_range(first..=last), self.den)
                }
            }
        };
        Some((&s - v, t))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomGameParams {
    /// Non-target locations; one target is added.
    pub locations: usize,
    pub transitions: usize,
    pub clock_bound: i64,
    pub weights: (i64, i64),
    pub rates: (i64, i64),
    pub reset_density: f64,
    /// Transitions only go from `q_i` to `q_j` with `j > i` or to the target.
    pub acyclic: bool,
    pub closed_guards: bool,
    pub urgent_prob: f64,
    /// Range of the final weight at `0` and at `M`, interpolated linearly.
    pub final_weights: (i64, i64),
}

impl Default for RandomGameParams {
    fn default() -> Self {
        RandomGameParams {
            locations: 3,
            transitions: 6,
            clock_bound: 2,
            weights: (-3, 3),
            rates: (-3, 3),
            reset_density: 0.3,
            acyclic: false,
            closed_guards: false,
            urgent_prob: 0.1,
            final_weights: (-3, 3),
        }
    }
}

/// A validated, deadlock-free game determined by `seed`.
pub fn random_game(seed: u64, p: &RandomGameParams) -> Result<Wtg, OracleError> {
    let bad = |m: &str| Err(OracleError::UnsatisfiableParams(m.into()));
    if p.locations == 0 {
        return bad("at least one non-target location");
    }
    if p.clock_bound < 1 {
        return bad("clock bound must be positive");
    }
    if p.weights.0 > p.weights.1 || p.rates.0 > p.rates.1 || p.final_weights.0 > p.final_weights.1 {
        return bad("empty range");
    }
    if !(0.0..=1.0).contains(&p.reset_density) || !(0.0..=1.0).contains(&p.urgent_prob) {
        return bad("probabilities must lie in [0, 1]");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = p.clock_bound;
    let n = p.locations;
    let mut locations: Vec<Location> = (0..n)
        .map(|i| Location {
            id: format!("q{i}"),
            owner: if rng.gen_bool(0.5) { Owner::Min } else { Owner::Max },
            rate: rng.gen_range(p.rates.0..=p.rates.1),
            urgent: rng.gen_bool(p.urgent_prob),
            final_weight: None,
        })
        .collect();
    let f0 = Rational::from_int(rng.gen_range(p.final_weights.0..=p.final_weights.1));
    let f1 = Rational::from_int(rng.gen_range(p.final_weights.0..=p.final_weights.1));
    let fin = Pwa::from_points(vec![(Rational::zero(), f0), (Rational::from_int(m), f1)]).expect("two points");
    locations.push(Location { id: "t".into(), owner: Owner::Target, rate: 0, urgent: false, final_weight: Some(fin) });
    let target = n;
    let mut transitions = vec![];
    for k in 0..p.transitions {
        let from = rng.gen_range(0..n);
        let to = if p.acyclic {
            let j = rng.gen_range(from + 1..=n);
            if j == n { target } else { j }
        } else {
            rng.gen_range(0..=n)
        };
        let lo = rng.gen_range(0..=m);
        let hi = rng.gen_range(lo..=m);
        let (lo_closed, hi_closed) = if p.closed_guards || lo == hi { (true, true) } else { (rng.gen_bool(0.5), rng.gen_bool(0.5)) };
        transitions.push(Transition {
            id: format!("d{k}"),
            from,
            to,
            guard: Guard { lo: Rational::from_int(lo), hi: Rational::from_int(hi), lo_closed, hi_closed },
            reset: rng.gen_bool(p.reset_density),
            weight: rng.gen_range(p.weights.0..=p.weights.1),
        });
    }
    let full = Guard::closed(0, m);
    for (q, l) in locations.iter().enumerate().take(n) {
        let guards: Vec<&Guard> = transitions.iter().filter(|t| t.from == q).map(|t| &t.guard).collect();
        let covered = |x: &Rational| guards.iter().any(|g| g.contains(x));
        let ok = if l.urgent {
            (0..=2 * m).all(|k| covered(&Rational::new(k, 2)))
        } else {
            covered(&Rational::from_int(m))
        };
        if !ok {
            let id = format!("e{q}");
            let weight = rng.gen_range(p.weights.0..=p.weights.1);
            transitions.push(Transition { id, from: q, to: target, guard: full.clone(), reset: false, weight });
        }
    }
    let g = Wtg::new(m, locations, transitions);
    let diags = g.validate();
    if !diags.is_empty() {
        return Err(OracleError::UnsatisfiableParams(diags[0].message.clone()));
    }
    Ok(g)
}

/// Every `1/d` multiple in `[lo, hi]`.
pub fn grid_points(lo: &Rational, hi: &Rational, d: u64) -> Vec<Rational> {
    let den = Rational::from_int(d as i64);
    let first = (lo * &den).ceil().to_i64().expect("small grid");
    let last = (hi * &den).floor().to_i64().expect("small grid");
    (first..=last).map(|k| Rational::new(k, d as i64)).collect()
}
