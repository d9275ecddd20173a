//! Exact solver for one-clock weighted timed games.
//!
//! Values are computed per region as exact piecewise-affine functions over the closure game,
//! then checked against the greatest-fixpoint characterization of the value.

pub mod arith;
pub mod error;
pub mod game;
pub mod oracle;
pub mod path;
pub mod pwa;
pub mod region;
pub mod solver;
pub mod strategy;
pub mod unfold;

pub use arith::{ExtValue, Inf, Rational};
pub use game::{Configuration, Owner, Play, Wtg};
pub use pwa::{Opt, Pwa};
pub use region::{build_closure, compute_regions, ClosedGame, Region};
