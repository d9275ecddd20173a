//! Values of finite and cyclic paths: the players optimize only the delays along a fixed path.

use crate::arith::{ExtValue, Rational};
use crate::error::PwaError;
use crate::pwa::{Opt, Pwa};
use crate::region::ClosedGame;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("transition {index} does not leave the location reached so far")]
    InconsistentPath { index: usize },
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("path passes through a target before its end")]
    ThroughTarget,
    #[error("path is not a cycle ending with a reset")]
    NotResetCycle,
    #[error("no valuation can follow the path")]
    Infeasible,
    #[error(transparent)]
    Pwa(#[from] PwaError),
}

/// `q_0 δ_0 q_1 ... δ_{k-1} q_k` in a closed game, stored as its start and its transitions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FinitePath {
    pub start: usize,
    pub transitions: Vec<usize>,
}

impl FinitePath {
    pub fn new(g: &ClosedGame, start: usize, transitions: Vec<usize>) -> Result<FinitePath, PathError> {
        let mut at = start;
        for (k, &t) in transitions.iter().enumerate() {
            let tr = &g.transitions[t];
            if tr.from != at {
                return Err(PathError::InconsistentPath { index: k });
            }
            if g.locations[at].is_target() {
                return Err(PathError::ThroughTarget);
            }
            at = tr.to;
        }
        Ok(FinitePath { start, transitions })
    }

    /// Path from transition ids; it starts at the source of the first one.
    pub fn from_ids(g: &ClosedGame, ids: &[&str]) -> Result<FinitePath, PathError> {
        let trs = ids
            .iter()
            .map(|id| g.transition(id).ok_or_else(|| PathError::UnknownTransition(id.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let start = trs.first().map_or(0, |&t| g.transitions[t].from);
        FinitePath::new(g, start, trs)
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn last(&self, g: &ClosedGame) -> usize {
        self.transitions.last().map_or(self.start, |&t| g.transitions[t].to)
    }

    pub fn locations(&self, g: &ClosedGame) -> Vec<usize> {
        let mut out = vec![self.start];
        out.extend(self.transitions.iter().map(|&t| g.transitions[t].to));
        out
    }

    pub fn is_cyclic(&self, g: &ClosedGame) -> bool {
        self.last(g) == self.start
    }

    pub fn ends_with_reset(&self, g: &ClosedGame) -> bool {
        self.transitions.last().is_some_and(|&t| g.transitions[t].reset)
    }
}

/// `ν -> Val^ν(π)` over the valuations of `q_0` from which `π` can be followed.
///
/// In a closure game this is the whole closed region of `q_0`. For a lifted base game a
/// guard may cut the domain short; the result is then defined on the feasible prefix.
pub fn path_value_fn(g: &ClosedGame, pi: &FinitePath) -> Result<Pwa, PathError> {
    let locs = pi.locations(g);
    let last = &g.locations[*locs.last().unwrap()];
    let mut f = Pwa::constant(last.lo.clone(), last.hi.clone(), Rational::zero());
    for (k, &t) in pi.transitions.iter().enumerate().rev() {
        let tr = &g.transitions[t];
        let src = &g.locations[locs[k]];
        let player = src.owner.player().ok_or(PathError::ThroughTarget)?;
        let mut e = g.elapse_of(t);
        e.player = player;
        let (a, b) = if tr.reset {
            if !f.contains(&Rational::zero()) {
                return Err(PathError::Infeasible);
            }
            tr.window.clone()
        } else {
            (tr.window.0.clone().max(f.lo().clone()), tr.window.1.clone().min(f.hi().clone()))
        };
        if a > b {
            return Err(PathError::Infeasible);
        }
        let (lo, hi) = if src.urgent {
            (src.lo.clone().max(a.clone()), src.hi.clone().min(b.clone()))
        } else {
            (src.lo.clone(), src.hi.clone().min(b.clone()))
        };
        if lo > hi {
            return Err(PathError::Infeasible);
        }
        e.window = (a, b);
        f = f.elapse_opt(&e, (&lo, &hi))?;
    }
    Ok(f)
}

/// Value of a cyclic path ending with a reset, from valuation 0.
pub fn cycle_value(g: &ClosedGame, pi: &FinitePath) -> Result<ExtValue, PathError> {
    if pi.is_empty() || !pi.is_cyclic(g) || !pi.ends_with_reset(g) {
        return Err(PathError::NotResetCycle);
    }
    let f = path_value_fn(g, pi)?;
    if !f.contains(&Rational::zero()) {
        return Err(PathError::Infeasible);
    }
    Ok(f.eval(&Rational::zero())?)
}

/// Which player optimizes the delay at each step of `pi`.
pub fn players(g: &ClosedGame, pi: &FinitePath) -> Vec<Opt> {
    pi.locations(g)
        .iter()
        .take(pi.len())
        .map(|&l| g.locations[l].owner.player().unwrap_or(Opt::Min))
        .collect()
}
