//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::load;
use wtg::arith::{lcm_of_denominators, q};
use wtg::game::{Configuration, Payoff};
use wtg::oracle::{grid_table, random_game, simulate, GridSpec, RandomController, RandomGameParams};
use wtg::path::{cycle_value, path_value_fn, FinitePath};
use wtg::region::Region;
use wtg::solver::*;
use wtg::unfold::{build_unfolding, CycleCache};
use wtg::{build_closure, ClosedGame, ExtValue, Inf, Pwa, Rational, Wtg};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: u64) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t <= Duration::from_secs(limit), || format!("took {t:.2?}, limit {limit} s"))
}

fn solve_at0(g: &Wtg, loc: &str) -> Result<SolveResult, String> {
    solve(g, loc, &Region::Point(q("0")), &SolveOptions::default()).map_err(|e| e.to_string())
}

fn value_at0(r: &SolveResult) -> ExtValue {
    r.value.eval(&q("0")).expect("root domain contains 0")
}

fn half_value() -> Outcome {
    let t = Instant::now();
    let r = solve_at0(&load("half"), "q0")?;
    within(t, 10)?;
    let v = value_at0(&r);
    ensure(v == ExtValue::finite(q("1/2")), || format!("value {v}"))?;
    let ok = match &r.status {
        Status::CertifiedExact => true,
        Status::CertifiedWithin(e) => *e <= q("1/100"),
        Status::Indeterminate => false,
    };
    let h = r.diagnostics.certificate.as_ref().map_or(0, |c| c.horizon);
    ensure(ok && h <= 200, || format!("status {} at H = {h}", r.status.label()))?;
    Ok(format!("value 1/2, {}, H = {h}", r.status.label()))
}

fn half_cycle() -> Outcome {
    let t = Instant::now();
    let lifted = ClosedGame::lift(&load("half"));
    let pi = FinitePath::from_ids(&lifted, &["d1", "d2"]).map_err(|e| e.to_string())?;
    let v = cycle_value(&lifted, &pi).map_err(|e| e.to_string())?;
    within(t, 1)?;
    ensure(v == ExtValue::int(-1), || format!("cycle value {v}"))?;
    Ok("q0 d1 q1 d2 q0 has value -1".into())
}

fn late_jump_values() -> Outcome {
    let t = Instant::now();
    let g = load("late_jump");
    let r1 = solve_at0(&g, "q1")?;
    let r0 = solve_at0(&g, "q0")?;
    within(t, 5)?;
    for (r, want) in [(&r1, 0), (&r0, -10)] {
        let v = value_at0(r);
        ensure(v == ExtValue::int(want) && r.status == Status::CertifiedExact, || {
            format!("value {v}, {}", r.status.label())
        })?;
    }
    let grid = grid_table(&g, GridSpec { d: 8, h: 4 }).map_err(|e| e.to_string())?;
    let gv = grid.at(&Configuration { location: g.location("q0").unwrap(), valuation: q("0") }).unwrap();
    ensure(gv == ExtValue::int(-10), || format!("grid oracle gives {gv} at q0"))?;
    Ok("q1: 0, q0: -10, both CertifiedExact; grid oracle agrees at q0".into())
}

fn open_resets_values() -> Outcome {
    let t = Instant::now();
    let g = load("open_resets");
    let c = build_closure(&g);
    let pi = FinitePath::from_ids(&c, &["d1@{0}>(0,1)", "d2@{0}>(0,1)"]).map_err(|e| e.to_string())?;
    let cv = cycle_value(&c, &pi).map_err(|e| e.to_string())?;
    let r = solve_at0(&g, "q0")?;
    within(t, 5)?;
    ensure(cv == ExtValue::int(0), || format!("cycle value {cv}"))?;
    let v = value_at0(&r);
    ensure(v == ExtValue::int(-1) && r.status == Status::CertifiedExact, || format!("value {v}, {}", r.status.label()))?;
    Ok("closure cycle value 0, value -1 CertifiedExact".into())
}

fn concat_cycles_cycles() -> Outcome {
    let t = Instant::now();
    let c = build_closure(&load("concat_cycles"));
    let path = |ids: &[&str]| FinitePath::from_ids(&c, ids).map_err(|e| e.to_string());
    let resets = cycle_value(&c, &path(&["d1@{0}>{1}", "d2@{0}>{1}"])?).map_err(|e| e.to_string())?;
    let f = path_value_fn(&c, &path(&["d3@{0}>{0}", "d4@{0}>{0}"])?).map_err(|e| e.to_string())?;
    let detour = f.eval(&q("0")).unwrap();
    let both = ["d3@{0}>(0,1)", "d4@(0,1)>(0,1)", "d1@(0,1)>{1}", "d2@{0}>{1}"];
    let joined = cycle_value(&c, &path(&both)?).map_err(|e| e.to_string())?;
    within(t, 1)?;
    ensure(resets == ExtValue::int(0), || format!("d1 d2 cycle {resets}"))?;
    ensure(detour == ExtValue::int(0), || format!("d3 d4 cycle {detour}"))?;
    ensure(joined == ExtValue::int(-1), || format!("concatenation {joined}"))?;
    Ok("cycles of value 0 and 0, concatenation -1".into())
}

fn golden() -> Vec<(&'static str, &'static str)> {
    vec![("half", "q0"), ("late_jump", "q1"), ("late_jump", "q0"), ("open_resets", "q0"), ("concat_cycles", "q0"), ("sup_chain", "q0")]
}

fn fixpoint_certificates() -> Outcome {
    let mut exact = 0;
    for (name, root) in golden() {
        let r = solve_at0(&load(name), root)?;
        if r.status != Status::CertifiedExact {
            continue;
        }
        exact += 1;
        let next = apply_f(&r.closure, &r.values).map_err(|e| e.to_string())?;
        for (l, inside) in r.scope.iter().enumerate() {
            if *inside {
                let d = next[l].max_abs_diff(&r.values[l]).map_err(|e| e.to_string())?;
                ensure(d == Some(Rational::zero()), || format!("{name}: residual {d:?} at {}", r.closure.locations[l].id))?;
            }
        }
    }
    ensure(exact >= 4, || format!("only {exact} exact results"))?;
    Ok(format!("F(V) = V with zero residual on {exact} exact results"))
}

fn random_params(seed: u64) -> RandomGameParams {
    let n = 1 + (seed % 5) as usize;
    RandomGameParams { locations: n, transitions: 2 * n, weights: (-3, 3), rates: (-3, 3), ..RandomGameParams::default() }
}

fn lipschitz_suite() -> Outcome {
    let t = Instant::now();
    for seed in 0..50 {
        let g = random_game(seed, &random_params(seed)).map_err(|e| e.to_string())?;
        let c = build_closure(&g);
        let bound = lipschitz_bound(&c);
        let mut prev = initial_map(&c);
        for i in 1..=20 {
            let next = apply_f(&c, &prev).map_err(|e| e.to_string())?;
            let s = map_max_slope(&next);
            ensure(s <= bound, || format!("seed {seed}: V_{i} slope {s} > {bound}"))?;
            for (l, (a, b)) in next.iter().zip(&prev).enumerate() {
                ensure(a.leq(b).unwrap(), || format!("seed {seed}: V_{i} rises at {}", c.locations[l].id))?;
            }
            prev = next;
        }
    }
    within(t, 60)?;
    Ok("50 games, V_1..V_20 within the Lipschitz bound and non-increasing".into())
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut points = 0usize;
    for seed in 0..50 {
        let p = RandomGameParams {
            locations: 1 + (seed % 4) as usize,
            transitions: 2 + (seed % 5) as usize,
            reset_density: 0.0,
            acyclic: true,
            closed_guards: true,
            urgent_prob: 0.0,
            ..RandomGameParams::default()
        };
        let g = random_game(seed, &p).map_err(|e| e.to_string())?;
        let c = build_closure(&g);
        let opts = SolveOptions::default();
        let mut solved: Vec<(usize, Pwa)> = vec![];
        for (l, loc) in c.locations.iter().enumerate() {
            if loc.is_target() {
                continue;
            }
            let r = solve_closure(c.clone(), l, &opts).map_err(|e| e.to_string())?;
            ensure(r.status == Status::CertifiedExact, || format!("seed {seed}: {} {}", loc.id, r.status.label()))?;
            solved.push((l, r.value));
        }
        let xs: Vec<Rational> = solved.iter().flat_map(|(_, f)| f.breakpoints()).collect();
        let d = lcm_of_denominators(&xs);
        let d: u64 = d.try_into().map_err(|_| format!("seed {seed}: denominator too large"))?;
        let grid = grid_table(&g, GridSpec { d, h: g.locations.len() }).map_err(|e| e.to_string())?;
        for (l, f) in &solved {
            let loc = &c.locations[*l];
            let region = &c.regions[loc.region.expect("closure location")];
            for k in 0..=(loc.hi.clone() * Rational::from_int(d as i64)).to_i64().unwrap() {
                let x = Rational::new(k, d as i64);
                if !region.contains(&x) {
                    continue;
                }
                let want = grid.at(&Configuration { location: loc.base, valuation: x.clone() }).unwrap();
                let got = f.eval(&x).unwrap();
                ensure(got == want, || format!("seed {seed}: {} at {x}: solver {got}, grid {want}", loc.id))?;
                points += 1;
            }
        }
    }
    within(t, 60)?;
    Ok(format!("50 games, {points} grid points agree exactly"))
}

fn unfolding_structure() -> Outcome {
    let (mut built, mut over_literal) = (0, 0);
    for (name, root) in golden() {
        let c = build_closure(&load(name));
        let attr = attractor(&c);
        let r = c.location(&format!("{root}@{{0}}")).unwrap();
        for kappa in 1..=3 {
            let u = build_unfolding(&c, r, kappa, DEFAULT_NODE_BUDGET, &attr.inside, &mut CycleCache::default())
                .map_err(|e| format!("{name} κ={kappa}: {e}"))?;
            u.check_structure(&c).map_err(|e| format!("{name} κ={kappa}: {e}"))?;
            built += 1;
            if u.stats().max_path_len > (c.reset_transitions() + 1) * kappa {
                over_literal += 1;
            }
        }
    }
    Ok(format!(
        "{built} unfoldings acyclic, resets distinct, stretches <= κ, depth <= (|Δ_R|+1)κ+|Δ_R|; \
         {over_literal} exceed (|Δ_R|+1)κ, which omits the joining resets"
    ))
}

fn strategy_soundness() -> Outcome {
    let mut notes = vec![];
    for (name, root) in golden() {
        let r = solve_at0(&load(name), root)?;
        let (max, _) = r.strategies.clone().ok_or_else(|| format!("{name}: no strategies"))?;
        let v = value_at0(&r);
        let eps = match &r.status {
            Status::CertifiedWithin(e) => e.clone(),
            _ => Rational::zero(),
        };
        let minus_inf = v.infinity() == Some(Inf::Neg);
        let (mut complete, mut cyclic) = (0, 0);
        for seed in 0..1000 {
            let mut max = max.clone();
            let mut min = RandomController::new(seed, 8);
            let out = simulate(&r.closure, r.root, &q("0"), &mut min, &mut max, 60).map_err(|e| e.to_string())?;
            if let Payoff::Complete(p) = &out.payoff {
                complete += 1;
                ensure(p.add_rational(&eps) >= v, || format!("{name} seed {seed}: payoff {p} below {v}"))?;
            }
            let neg = out.negative_cycles();
            if !neg.is_empty() {
                cyclic += 1;
                ensure(minus_inf, || format!("{name} seed {seed}: negative cycle {:?}", neg[0]))?;
            }
        }
        if minus_inf {
            notes.push(format!("{name}: value -inf, cycle check skipped ({cyclic} negative cyclic plays)"));
        }
        let _ = complete;
    }
    let mut msg = "1000 plays per game, no payoff below the value".to_string();
    for n in notes {
        msg.push_str("; ");
        msg.push_str(&n);
    }
    Ok(msg)
}

fn staircase(i: u32) -> Pwa {
    if i == 0 {
        return Pwa::constant(q("0"), q("1"), q("1"));
    }
    let k = Rational::from_int(1i64 << i);
    let low = Rational::one() / k.clone();
    let corner = (k.clone() - Rational::one()) / k;
    Pwa::from_points(vec![(q("0"), low.clone()), (corner, low), (q("1"), q("1"))]).unwrap()
}

fn scott_regression() -> Outcome {
    let g = load("sup_chain");
    let lifted = ClosedGame::lift(&g);
    let (q0, q1) = (lifted.location("q0").unwrap(), lifted.location("q1").unwrap());
    let mut x = initial_map(&lifted);
    for i in 0..=20 {
        x[q1] = staircase(i);
        let fx = apply_f(&lifted, &x).map_err(|e| e.to_string())?;
        ensure(fx[q0] == Pwa::constant(q("0"), q("1"), q("1")), || format!("F(X_{i})(q0) = {:?}", fx[q0]))?;
    }
    x[q1] = Pwa::constant(q("0"), q("1"), q("0"));
    let limit = apply_f(&lifted, &x).map_err(|e| e.to_string())?;
    ensure(limit[q0] == Pwa::constant(q("0"), q("1"), q("0")), || "F(inf X_i)(q0) is not 0".into())?;

    let r = solve_at0(&g, "q0")?;
    let v = value_at0(&r);
    ensure(v == ExtValue::int(0) && r.status.is_certified(), || format!("solver gives {v}, {}", r.status.label()))?;
    let mut naive = r.values.clone();
    naive[r.root] = Pwa::constant(q("0"), q("0"), q("1"));
    let c = certify(&r.closure, &naive, 200, &q("1/100"), Some(&r.scope)).map_err(|e| e.to_string())?;
    ensure(c.status == Status::Indeterminate, || format!("limit-swapped candidate certified as {}", c.status.label()))?;
    Ok("F(X_i)(q0) = 1 for i <= 20, F(inf X_i)(q0) = 0; the swapped limit is rejected, solver gives 0".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("half value is 1/2", half_value),
        ("half cycle value is -1", half_cycle),
        ("late_jump values 0 and -10", late_jump_values),
        ("open_resets closure cycle and value", open_resets_values),
        ("concat_cycles cycle values do not add up", concat_cycles_cycles),
        ("fixpoint certificates", fixpoint_certificates),
        ("Lipschitz and monotone iterates", lipschitz_suite),
        ("grid oracle equivalence", oracle_equivalence),
        ("unfolding structure", unfolding_structure),
        ("strategy soundness", strategy_soundness),
        ("F is not Scott-continuous", scott_regression),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = check();
        let dt = t.elapsed();
        match res {
            Ok(detail) => println!("PASS {:>2} {name} ({dt:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({dt:.2?}): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
