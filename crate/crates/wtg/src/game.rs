//! Game model: locations, transitions, the JSON text format, validation and play semantics.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use serde_json::Value;

use crate::arith::{rational_from_json, ExtValue, Inf, Rational};
use crate::pwa::{Opt, Pwa};
use crate::region::{compute_regions, Region};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Min,
    Max,
    Target,
}

impl Owner {
    pub fn player(self) -> Option<Opt> {
        match self {
            Owner::Min => Some(Opt::Min),
            Owner::Max => Some(Opt::Max),
            Owner::Target => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Owner::Min => "min",
            Owner::Max => "max",
            Owner::Target => "target",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub id: String,
    pub owner: Owner,
    pub rate: i64,
    pub urgent: bool,
    /// Present iff the location is a target; defined on `[0, M]`.
    pub final_weight: Option<Pwa>,
}

/// An interval with integer-valued ends, each open or closed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Guard {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Guard {
    pub fn closed(lo: i64, hi: i64) -> Guard {
        Guard { lo: lo.into(), hi: hi.into(), lo_closed: true, hi_closed: true }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let above = if self.lo_closed { x >= &self.lo } else { x > &self.lo };
        let below = if self.hi_closed { x <= &self.hi } else { x < &self.hi };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn closure(&self) -> (Rational, Rational) {
        (self.lo.clone(), self.hi.clone())
    }

    pub fn meets(&self, r: &Region) -> bool {
        match r {
            Region::Point(p) => self.contains(p),
            Region::Open(a, b) => !self.is_empty() && &self.lo < b && &self.hi > a,
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{},{}{r}", self.lo, self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub guard: Guard,
    pub reset: bool,
    pub weight: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wtg {
    pub clock_bound: i64,
    pub locations: Vec<Location>,
    pub transitions: Vec<Transition>,
    loc_index: HashMap<String, usize>,
    trans_index: HashMap<String, usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiagCode {
    SyntaxError,
    UnknownLocation,
    GuardOutOfBounds,
    DuplicateId,
    BadValue,
    DeadlockViolation,
    TargetOutgoingViolation,
    FinalWeightViolation,
    ClockBoundViolation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{}: {:?}: {}", l, c, self.code, self.message),
            _ => write!(f, "{:?}: {}", self.code, self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{} diagnostic(s), first: {}", .0.len(), .0[0])]
pub struct ParseError(pub Vec<Diagnostic>);

impl ParseError {
    pub fn has(&self, code: DiagCode) -> bool {
        self.0.iter().any(|d| d.code == code)
    }
}

/// Where a valuation stands relative to one edge rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MoveRule {
    UnknownTransition,
    WrongSource,
    FromTarget,
    NegativeDelay,
    UrgentDelay,
    GuardViolated,
    ClockBound,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("illegal move at step {step}: {rule:?}")]
pub struct IllegalMove {
    pub step: usize,
    pub rule: MoveRule,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Configuration {
    pub location: usize,
    pub valuation: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Play {
    pub start: Configuration,
    /// `(delay, transition index)` pairs.
    pub steps: Vec<(Rational, usize)>,
}

/// Payoff of a finite play: complete when it ends in a target, otherwise only its weight so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payoff {
    Complete(ExtValue),
    Partial(Rational),
}

impl Payoff {
    /// Payoff proper: an unfinished play counts as `+inf`.
    pub fn value(&self) -> ExtValue {
        match self {
            Payoff::Complete(v) => v.clone(),
            Payoff::Partial(_) => ExtValue::PosInf,
        }
    }
}

fn locate(text: &str, needle: &str) -> (Option<usize>, Option<usize>) {
    match text.find(needle) {
        Some(off) => {
            let before = &text[..off];
            let line = before.matches('\n').count() + 1;
            let col = off - before.rfind('\n').map_or(0, |p| p + 1) + 1;
            (Some(line), Some(col))
        }
        None => (None, None),
    }
}

struct Diags<'a> {
    text: &'a str,
    list: Vec<Diagnostic>,
}

impl Diags<'_> {
    fn push(&mut self, code: DiagCode, message: String, anchor: &str) {
        let (line, column) = locate(self.text, &format!("\"{anchor}\""));
        self.list.push(Diagnostic { code, message, line, column });
    }
}

fn int_field(v: &Value, key: &str, default: Option<i64>) -> Result<i64, String> {
    match v.get(key) {
        None | Some(Value::Null) => default.ok_or_else(|| format!("missing field `{key}`")),
        Some(x) => match rational_from_json(x) {
            Ok(r) => r.to_i64().ok_or_else(|| format!("field `{key}` must be an integer")),
            Err(e) => Err(format!("field `{key}`: {e}")),
        },
    }
}

fn bool_field(v: &Value, key: &str, default: bool) -> Result<bool, String> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(Value::Bool(b)) => Ok(*b),
        Some(_) => Err(format!("field `{key}` must be a boolean")),
    }
}

fn str_field<'v>(v: &'v Value, key: &str) -> Result<&'v str, String> {
    v.get(key).and_then(Value::as_str).ok_or_else(|| format!("missing string field `{key}`"))
}

fn parse_final(v: Option<&Value>, m: i64) -> Result<Pwa, String> {
    let (lo, hi) = (Rational::from_int(0), Rational::from_int(m));
    match v {
        None | Some(Value::Null) => Ok(Pwa::constant(lo, hi, Rational::zero())),
        Some(Value::String(s)) if s == "+inf" => Ok(Pwa::uniform_inf(lo, hi, Inf::Pos)),
        Some(Value::String(s)) if s == "-inf" => Ok(Pwa::uniform_inf(lo, hi, Inf::Neg)),
        Some(Value::Array(pts)) => {
            let mut out = Vec::with_capacity(pts.len());
            for p in pts {
                let pair = p.as_array().filter(|a| a.len() == 2).ok_or("breakpoint must be [x, y]")?;
                let x = rational_from_json(&pair[0]).map_err(|e| e.to_string())?;
                let y = rational_from_json(&pair[1]).map_err(|e| e.to_string())?;
                out.push((x, y));
            }
            let f = Pwa::from_points(out).map_err(|e| e.to_string())?;
            if f.lo() != &lo || f.hi() != &hi {
                return Err(format!("final weight must span [0, {m}]"));
            }
            Ok(f)
        }
        Some(other) => rational_from_json(other)
            .map(|c| Pwa::constant(lo, hi, c))
            .map_err(|e| e.to_string()),
    }
}

fn parse_guard(v: Option<&Value>, m: i64) -> Result<Guard, String> {
    let Some(g) = v else {
        return Ok(Guard::closed(0, m));
    };
    let bound = |key: &str, default: i64| -> Result<Rational, String> {
        match g.get(key) {
            None | Some(Value::Null) => Ok(Rational::from_int(default)),
            Some(x) => rational_from_json(x).map_err(|e| e.to_string()),
        }
    };
    Ok(Guard {
        lo: bound("lo", 0)?,
        hi: bound("hi", m)?,
        lo_closed: bool_field(g, "lo_closed", true)?,
        hi_closed: bool_field(g, "hi_closed", true)?,
    })
}

impl Wtg {
    pub fn new(clock_bound: i64, locations: Vec<Location>, transitions: Vec<Transition>) -> Wtg {
        let loc_index = locations.iter().enumerate().map(|(i, l)| (l.id.clone(), i)).collect();
        let trans_index = transitions.iter().enumerate().map(|(i, t)| (t.id.clone(), i)).collect();
        Wtg { clock_bound, locations, transitions, loc_index, trans_index }
    }

    pub fn parse(text: &str) -> Result<Wtg, ParseError> {
        let root: Value = serde_json::from_str(text).map_err(|e| {
            ParseError(vec![Diagnostic {
                code: DiagCode::SyntaxError,
                message: e.to_string(),
                line: Some(e.line()),
                column: Some(e.column()),
            }])
        })?;
        let mut d = Diags { text, list: Vec::new() };
        let m = match int_field(&root, "clock_bound", None) {
            Ok(m) if m > 0 => m,
            Ok(_) => {
                d.push(DiagCode::BadValue, "clock_bound must be positive".into(), "clock_bound");
                1
            }
            Err(e) => {
                d.push(DiagCode::SyntaxError, e, "clock_bound");
                1
            }
        };
        let locs = root.get("locations").and_then(Value::as_array).cloned().unwrap_or_default();
        if locs.is_empty() {
            d.push(DiagCode::SyntaxError, "empty location set".into(), "locations");
        }
        let mut locations = Vec::new();
        let mut ids = HashMap::new();
        for (k, l) in locs.iter().enumerate() {
            let id = match str_field(l, "id") {
                Ok(id) => id.to_string(),
                Err(e) => {
                    d.push(DiagCode::SyntaxError, format!("locations[{k}]: {e}"), "locations");
                    continue;
                }
            };
            if ids.insert(id.clone(), locations.len()).is_some() {
                d.push(DiagCode::DuplicateId, format!("duplicate location `{id}`"), &id);
            }
            let owner = match l.get("owner").and_then(Value::as_str) {
                Some("min") => Owner::Min,
                Some("max") => Owner::Max,
                Some("target") => Owner::Target,
                _ => {
                    d.push(DiagCode::SyntaxError, format!("location `{id}`: owner must be min|max|target"), &id);
                    Owner::Min
                }
            };
            let rate = int_field(l, "rate", Some(0)).unwrap_or_else(|e| {
                d.push(DiagCode::BadValue, format!("location `{id}`: {e}"), &id);
                0
            });
            let urgent = bool_field(l, "urgent", false).unwrap_or_else(|e| {
                d.push(DiagCode::BadValue, format!("location `{id}`: {e}"), &id);
                false
            });
            let final_weight = if owner == Owner::Target {
                match parse_final(l.get("final"), m) {
                    Ok(f) => Some(f),
                    Err(e) => {
                        d.push(DiagCode::FinalWeightViolation, format!("location `{id}`: {e}"), &id);
                        None
                    }
                }
            } else {
                None
            };
            locations.push(Location { id, owner, rate, urgent, final_weight });
        }
        let trs = root.get("transitions").and_then(Value::as_array).cloned().unwrap_or_default();
        let mut transitions = Vec::new();
        let mut tids = HashMap::new();
        for (k, t) in trs.iter().enumerate() {
            let id = match str_field(t, "id") {
                Ok(id) => id.to_string(),
                Err(e) => {
                    d.push(DiagCode::SyntaxError, format!("transitions[{k}]: {e}"), "transitions");
                    continue;
                }
            };
            if tids.insert(id.clone(), transitions.len()).is_some() {
                d.push(DiagCode::DuplicateId, format!("duplicate transition `{id}`"), &id);
            }
            let mut end = |key: &str| -> Option<usize> {
                match t.get(key).and_then(Value::as_str) {
                    Some(name) => match ids.get(name) {
                        Some(&i) => Some(i),
                        None => {
                            d.push(
                                DiagCode::UnknownLocation,
                                format!("transition `{id}`: unknown location `{name}`"),
                                &id,
                            );
                            None
                        }
                    },
                    None => {
                        d.push(DiagCode::SyntaxError, format!("transition `{id}`: missing `{key}`"), &id);
                        None
                    }
                }
            };
            let from = end("from");
            let to = end("to");
            let guard = match parse_guard(t.get("guard"), m) {
                Ok(g) => g,
                Err(e) => {
                    d.push(DiagCode::BadValue, format!("transition `{id}`: {e}"), &id);
                    continue;
                }
            };
            let zero = Rational::zero();
            let mm = Rational::from_int(m);
            if guard.lo < zero || guard.hi > mm || !guard.lo.is_integer() || !guard.hi.is_integer() {
                d.push(
                    DiagCode::GuardOutOfBounds,
                    format!("transition `{id}`: guard {guard} must have integer bounds within [0, {m}]"),
                    &id,
                );
            } else if guard.is_empty() {
                d.push(DiagCode::GuardOutOfBounds, format!("transition `{id}`: empty guard {guard}"), &id);
            }
            let reset = bool_field(t, "reset", false).unwrap_or_else(|e| {
                d.push(DiagCode::BadValue, format!("transition `{id}`: {e}"), &id);
                false
            });
            let weight = int_field(t, "weight", Some(0)).unwrap_or_else(|e| {
                d.push(DiagCode::BadValue, format!("transition `{id}`: {e}"), &id);
                0
            });
            if let (Some(from), Some(to)) = (from, to) {
                transitions.push(Transition { id, from, to, guard, reset, weight });
            }
        }
        if d.list.is_empty() {
            Ok(Wtg::new(m, locations, transitions))
        } else {
            Err(ParseError(d.list))
        }
    }

    pub fn to_json(&self) -> Value {
        let locations: Vec<Value> = self
            .locations
            .iter()
            .map(|l| {
                let mut o = serde_json::json!({
                    "id": l.id,
                    "owner": l.owner.as_str(),
                    "rate": l.rate,
                    "urgent": l.urgent,
                });
                if let Some(f) = &l.final_weight {
                    o["final"] = final_to_json(f);
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
                    "guard": guard_to_json(&t.guard),
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

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable") + "\n"
    }

    /// Graphviz view: circles for Min, boxes for Max, double circles for targets.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph wtg {\n");
        for (i, l) in self.locations.iter().enumerate() {
            let shape = match l.owner {
                Owner::Min => "circle",
                Owner::Max => "box",
                Owner::Target => "doublecircle",
            };
            let rate = if l.owner == Owner::Target { String::new() } else { format!("\\n{}", l.rate) };
            let style = if l.urgent { ", style=dashed" } else { "" };
            s.push_str(&format!("  n{i} [label=\"{}{rate}\", shape={shape}{style}];\n", l.id));
        }
        for t in &self.transitions {
            let reset = if t.reset { " x:=0" } else { "" };
            s.push_str(&format!("  n{} -> n{} [label=\"{} {}{reset} w={}\"];\n", t.from, t.to, t.id, t.guard, t.weight));
        }
        s.push_str("}\n");
        s
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

    pub fn outgoing(&self, loc: usize) -> impl Iterator<Item = usize> + '_ {
        self.transitions.iter().enumerate().filter(move |(_, t)| t.from == loc).map(|(i, _)| i)
    }

    /// Largest `|wt(q)|` over locations where time may elapse.
    pub fn w_loc(&self) -> i64 {
        self.locations
            .iter()
            .filter(|l| l.owner != Owner::Target && !l.urgent)
            .map(|l| l.rate.abs())
            .max()
            .unwrap_or(0)
    }

    pub fn w_tr(&self) -> i64 {
        self.transitions.iter().map(|t| t.weight.abs()).max().unwrap_or(0)
    }

    /// Largest `|wtfin|` over the finite final weights.
    pub fn w_fin(&self) -> Rational {
        self.locations
            .iter()
            .filter_map(|l| l.final_weight.as_ref())
            .filter_map(|f| f.points())
            .flat_map(|p| p.iter().map(|(_, y)| y.abs()))
            .fold(Rational::zero(), Rational::max)
    }

    pub fn w(&self) -> Rational {
        Rational::from_int(self.w_loc().max(self.w_tr())).max(self.w_fin())
    }

    /// Largest absolute slope among the finite final weights.
    pub fn final_slope(&self) -> Rational {
        self.locations
            .iter()
            .filter_map(|l| l.final_weight.as_ref())
            .filter_map(|f| f.max_slope().ok())
            .fold(Rational::zero(), Rational::max)
    }

    /// Checks deadlock-freedom per region, target sinks, final weights and clock bounds.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut push = |code, message| out.push(Diagnostic { code, message, line: None, column: None });
        let m = self.m();
        for t in &self.transitions {
            if self.locations[t.from].owner == Owner::Target {
                push(
                    DiagCode::TargetOutgoingViolation,
                    format!("transition `{}` leaves target `{}`", t.id, self.locations[t.from].id),
                );
            }
            if t.guard.lo < Rational::zero() || t.guard.hi > m {
                push(DiagCode::ClockBoundViolation, format!("guard of `{}` exceeds [0, {m}]", t.id));
            }
        }
        for l in &self.locations {
            match (&l.owner, &l.final_weight) {
                (Owner::Target, None) => {
                    push(DiagCode::FinalWeightViolation, format!("target `{}` lacks a final weight", l.id))
                }
                (Owner::Target, Some(f)) if f.lo() != &Rational::zero() || f.hi() != &m => push(
                    DiagCode::FinalWeightViolation,
                    format!("final weight of `{}` is not defined on [0, {m}]", l.id),
                ),
                (Owner::Target, Some(_)) if l.urgent => {
                    push(DiagCode::FinalWeightViolation, format!("target `{}` is marked urgent", l.id))
                }
                (Owner::Min | Owner::Max, Some(_)) => push(
                    DiagCode::FinalWeightViolation,
                    format!("non-target `{}` carries a final weight", l.id),
                ),
                _ => {}
            }
        }
        let regions = compute_regions(self);
        for (qi, l) in self.locations.iter().enumerate() {
            if l.owner == Owner::Target {
                continue;
            }
            for (ri, r) in regions.iter().enumerate() {
                let live = self.outgoing(qi).any(|ti| {
                    let g = &self.transitions[ti].guard;
                    if l.urgent {
                        g.meets(r)
                    } else {
                        regions[ri..].iter().any(|r2| g.meets(r2))
                    }
                });
                if !live {
                    push(DiagCode::DeadlockViolation, format!("location `{}` deadlocks in region {r}", l.id));
                }
            }
        }
        out
    }

    /// One edge of the semantics.
    pub fn step(&self, c: &Configuration, t: &Rational, tr: usize) -> Result<Configuration, MoveRule> {
        let d = self.transitions.get(tr).ok_or(MoveRule::UnknownTransition)?;
        let src = &self.locations[c.location];
        if d.from != c.location {
            return Err(MoveRule::WrongSource);
        }
        if src.owner == Owner::Target {
            return Err(MoveRule::FromTarget);
        }
        if t.is_negative() {
            return Err(MoveRule::NegativeDelay);
        }
        if src.urgent && !t.is_zero() {
            return Err(MoveRule::UrgentDelay);
        }
        let v = &c.valuation + t;
        if v > self.m() {
            return Err(MoveRule::ClockBound);
        }
        if !d.guard.contains(&v) {
            return Err(MoveRule::GuardViolated);
        }
        let valuation = if d.reset { Rational::zero() } else { v };
        Ok(Configuration { location: d.to, valuation })
    }

    /// Configurations visited by a play, starting with its first.
    pub fn replay(&self, p: &Play) -> Result<Vec<Configuration>, IllegalMove> {
        let mut out = vec![p.start.clone()];
        for (k, (t, tr)) in p.steps.iter().enumerate() {
            let next = self.step(out.last().unwrap(), t, *tr).map_err(|rule| IllegalMove { step: k, rule })?;
            out.push(next);
        }
        Ok(out)
    }

    /// Cumulative weight `sum wt(q_i)*t_i + wt(δ_i)`.
    pub fn weight_sum(&self, p: &Play) -> Result<Rational, IllegalMove> {
        let confs = self.replay(p)?;
        let mut w = Rational::zero();
        for (c, (t, tr)) in confs.iter().zip(&p.steps) {
            let l = &self.locations[c.location];
            let rate = if l.urgent { 0 } else { l.rate };
            w = w + Rational::from_int(rate) * t + Rational::from_int(self.transitions[*tr].weight);
        }
        Ok(w)
    }

    pub fn payoff(&self, p: &Play) -> Result<Payoff, IllegalMove> {
        let confs = self.replay(p)?;
        let w = self.weight_sum(p)?;
        let last = confs.last().unwrap();
        let l = &self.locations[last.location];
        Ok(match &l.final_weight {
            Some(f) if l.owner == Owner::Target => {
                let fin = f.eval(&last.valuation).expect("valuation within [0, M]");
                Payoff::Complete(fin.add_rational(&w))
            }
            _ => Payoff::Partial(w),
        })
    }
}

fn final_to_json(f: &Pwa) -> Value {
    match f.inf_sign() {
        Some(Inf::Pos) => Value::String("+inf".into()),
        Some(Inf::Neg) => Value::String("-inf".into()),
        None => Value::Array(
            f.points()
                .unwrap()
                .iter()
                .map(|(x, y)| serde_json::json!([x.to_string(), y.to_string()]))
                .collect(),
        ),
    }
}

fn guard_to_json(g: &Guard) -> Value {
    serde_json::json!({
        "lo": g.lo.to_i64().map_or_else(|| Value::String(g.lo.to_string()), Value::from),
        "hi": g.hi.to_i64().map_or_else(|| Value::String(g.hi.to_string()), Value::from),
        "lo_closed": g.lo_closed,
        "hi_closed": g.hi_closed,
    })
}
