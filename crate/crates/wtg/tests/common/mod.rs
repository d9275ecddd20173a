#![allow(dead_code)]

use wtg::arith::q;
use wtg::game::{Guard, Location, Transition};
use wtg::{Owner, Pwa, Rational, Wtg};

pub fn games_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../games")
}

pub fn load(name: &str) -> Wtg {
    let text = std::fs::read_to_string(games_dir().join(format!("{name}.json"))).unwrap();
    Wtg::parse(&text).unwrap()
}

pub fn loc(id: &str, owner: Owner, rate: i64) -> Location {
    Location { id: id.into(), owner, rate, urgent: false, final_weight: None }
}

pub fn target(id: &str, m: i64) -> Location {
    Location {
        id: id.into(),
        owner: Owner::Target,
        rate: 0,
        urgent: false,
        final_weight: Some(Pwa::constant(q("0"), Rational::from_int(m), q("0"))),
    }
}

pub fn edge(id: &str, from: usize, to: usize, lo: i64, hi: i64, reset: bool, weight: i64) -> Transition {
    Transition { id: id.into(), from, to, guard: Guard::closed(lo, hi), reset, weight }
}

/// Replays a fixed list of `(delay, transition id)` moves.
pub struct Scripted {
    pub moves: Vec<(Rational, String)>,
    pub next: usize,
}

impl Scripted {
    pub fn new(moves: &[(&str, &str)]) -> Scripted {
        Scripted { moves: moves.iter().map(|(d, t)| (q(d), t.to_string())).collect(), next: 0 }
    }
}

impl wtg::strategy::Controller for Scripted {
    fn choose(&mut self, g: &wtg::ClosedGame, _loc: usize, _v: &Rational) -> Option<(Rational, usize)> {
        let (d, t) = self.moves.get(self.next)?.clone();
        self.next += 1;
        Some((d, g.transition(&t)?))
    }
}
