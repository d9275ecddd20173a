mod common;

use common::load;
use wtg::arith::q;
use wtg::game::Payoff;
use wtg::oracle::{simulate, RandomController};
use wtg::region::Region;
use wtg::solver::*;
use wtg::strategy::{extract_strategies, Controller, Delay, StrategyError};
use wtg::{ExtValue, Rational};

fn solved(name: &str, root: &str) -> SolveResult {
    solve(&load(name), root, &Region::Point(q("0")), &SolveOptions::default()).unwrap()
}

fn describe(r: &SolveResult, loc: &str, v: &str) -> (String, Delay) {
    let (max, _) = r.strategies.as_ref().unwrap();
    let l = r.closure.location(loc).unwrap();
    let e = max.tables[l].as_ref().unwrap().lookup(&q(v)).unwrap();
    (r.closure.transitions[e.transition].id.clone(), e.delay.clone())
}

#[test]
fn max_escapes_the_cheap_exit() {
    // Landing after 1 takes the -10 exit away from Min.
    let r = solved("late_jump", "q1");
    assert_eq!(describe(&r, "q1@{0}", "0"), ("d2@{0}>(1,2)".into(), Delay::Until(q("1"))));
}

#[test]
fn half_max_table() {
    let r = solved("half", "q0");
    assert_eq!(describe(&r, "q1@[0,1]", "0"), ("d4@(0,1)>(0,1)".into(), Delay::Now));
    assert_eq!(describe(&r, "q1@[0,1]", "49/100"), ("d4@(0,1)>(0,1)".into(), Delay::Now));
    assert_eq!(describe(&r, "q1@[0,1]", "1/2"), ("d2@(0,1)>{1}".into(), Delay::Until(q("1"))));
    assert_eq!(describe(&r, "q2@[0,1]", "1/3"), ("d5@(0,1)>{1}".into(), Delay::Until(q("1"))));
}

#[test]
fn a_forced_edge_has_one_delay() {
    let r = solved("concat_cycles", "q0");
    assert!(r.strategies.is_some());
    assert_eq!(describe(&r, "q1@{0}", "0"), ("d2@{0}>{1}".into(), Delay::Until(q("1"))));
}

#[test]
fn min_switching_reaches_the_target() {
    for (name, root) in [("half", "q0"), ("late_jump", "q1"), ("late_jump", "q0"), ("open_resets", "q0"), ("sup_chain", "q0")] {
        let r = solved(name, root);
        let (_, mut min) = r.strategies.clone().unwrap();
        for seed in 0..40 {
            min.restart();
            let mut max = RandomController::new(seed, 8);
            let limit = min.threshold + r.closure.locations.len() + 1;
            let out = simulate(&r.closure, r.root, &q("0"), &mut min, &mut max, limit).unwrap();
            let Payoff::Complete(p) = out.payoff else { panic!("{name}: play did not reach a target") };
            let v = r.value.eval(&q("0")).unwrap();
            let eps = match &r.status {
                Status::CertifiedWithin(e) => e.clone(),
                _ => Rational::zero(),
            };
            assert!(p <= v.add_rational(&eps), "{name}: {p} > {v}");
        }
    }
}

#[test]
fn uncertified_values_are_rejected() {
    let r = solved("late_jump", "q1");
    let attr = attractor(&r.closure);
    let mut bumped = r.values.clone();
    bumped[r.root] = bumped[r.root].add_const(&q("1"));
    let e = extract_strategies(&r.closure, &bumped, &r.scope, &attr, None).unwrap_err();
    assert!(matches!(e, StrategyError::UncertifiedInput(_)));
}

#[test]
fn indeterminate_results_carry_no_strategies() {
    let opts = SolveOptions { kappa: KappaMode::Fixed(2), horizon: 20, reconstruct: false, ..SolveOptions::default() };
    let r = solve(&load("half"), "q0", &Region::Point(q("0")), &opts).unwrap();
    assert_eq!(r.status, Status::Indeterminate);
    assert_eq!(r.diagnostics.source, Source::UpperBound);
    assert!(r.strategies.is_none());
    assert!(r.value.eval(&q("0")).unwrap() > ExtValue::finite(q("1/2")));
}
