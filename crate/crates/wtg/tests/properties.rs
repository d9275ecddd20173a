use proptest::prelude::*;
use wtg::arith::q;
use wtg::oracle::{random_game, RandomGameParams};
use wtg::pwa::Elapse;
use wtg::solver::{apply_f, iterates, lipschitz_bound, value_iterate};
use wtg::{build_closure, ExtValue, Opt, Pwa, Rational};

fn rat(n: i64, d: i64) -> Rational {
    Rational::from_int(n) / Rational::from_int(d)
}

/// A finite PWA on `[0, 4]` with quarter-grid breakpoints.
fn arb_pwa() -> impl Strategy<Value = Pwa> {
    (prop::collection::btree_set(1i64..16, 0..5), prop::collection::vec(-12i64..12, 6)).prop_map(|(xs, ys)| {
        let mut xs: Vec<i64> = xs.into_iter().collect();
        xs.insert(0, 0);
        xs.push(16);
        let points = xs.iter().enumerate().map(|(i, &x)| (rat(x, 4), rat(ys[i % ys.len()], 2))).collect();
        Pwa::from_points(points).unwrap()
    })
}

fn probe_points(fs: &[&Pwa]) -> Vec<Rational> {
    let mut xs: Vec<Rational> = fs.iter().flat_map(|f| f.breakpoints()).collect();
    xs.push(fs[0].lo().clone());
    xs.push(fs[0].hi().clone());
    xs.sort();
    xs.dedup();
    let mids: Vec<Rational> = xs.windows(2).map(|w| (&w[0] + &w[1]) / Rational::from_int(2)).collect();
    xs.extend(mids);
    xs
}

fn pointwise_le(a: &Pwa, b: &Pwa) -> bool {
    probe_points(&[a, b]).iter().all(|x| a.eval(x).unwrap() <= b.eval(x).unwrap())
}

fn small_game() -> impl Strategy<Value = wtg::Wtg> {
    (any::<u64>(), 1usize..5, 0.0f64..0.6).prop_map(|(seed, n, resets)| {
        let p = RandomGameParams {
            locations: n,
            transitions: 2 * n,
            clock_bound: 2,
            weights: (-3, 3),
            rates: (-3, 3),
            reset_density: resets,
            ..RandomGameParams::default()
        };
        random_game(seed, &p).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn min_and_max_bracket_their_inputs(f in arb_pwa(), g in arb_pwa()) {
        let lo = Pwa::pointwise_opt(&[f.clone(), g.clone()], Opt::Min).unwrap();
        let hi = Pwa::pointwise_opt(&[f.clone(), g.clone()], Opt::Max).unwrap();
        for x in probe_points(&[&f, &g]) {
            let (a, b) = (f.eval(&x).unwrap(), g.eval(&x).unwrap());
            prop_assert_eq!(lo.eval(&x).unwrap(), a.clone().min(b.clone()));
            prop_assert_eq!(hi.eval(&x).unwrap(), a.max(b));
        }
        prop_assert!(lo.leq(&f).unwrap() && lo.leq(&g).unwrap());
    }

    #[test]
    fn normal_form_ignores_collinear_points(f in arb_pwa(), k in 1i64..16) {
        let x = rat(k, 4) + rat(1, 7);
        if x < *f.hi() {
            let mut pts = f.points().unwrap().to_vec();
            let y = f.eval(&x).unwrap().as_finite().unwrap().clone();
            pts.push((x, y));
            pts.sort();
            prop_assert_eq!(Pwa::from_points(pts).unwrap(), f);
        }
    }

    #[test]
    fn shifting_commutes_with_evaluation(f in arb_pwa(), c in -8i64..8, s in -3i64..3) {
        let g = f.add_affine(&Rational::from_int(s), &Rational::from_int(c));
        for x in probe_points(&[&f]) {
            let expect = f.eval(&x).unwrap().as_finite().unwrap() + Rational::from_int(s) * &x + Rational::from_int(c);
            prop_assert_eq!(g.eval(&x).unwrap(), ExtValue::finite(expect));
        }
    }

    #[test]
    fn elapse_matches_candidate_enumeration(
        f in arb_pwa(),
        rate in -3i64..4,
        addend in -3i64..4,
        a in 0i64..16,
        len in 0i64..16,
        max_player in any::<bool>(),
    ) {
        let b = (a + len).min(16);
        let (a, b) = (rat(a, 4), rat(b, 4));
        let player = if max_player { Opt::Max } else { Opt::Min };
        let e = Elapse {
            rate: Rational::from_int(rate),
            addend: Rational::from_int(addend),
            window: (a.clone(), b.clone()),
            player,
            reset: false,
            urgent: false,
        };
        let out = f.elapse_opt(&e, (&q("0"), &b)).unwrap();
        for nu in probe_points(&[&f, &out]).into_iter().filter(|x| *x <= b) {
            let start = nu.clone().max(a.clone());
            let mut cands: Vec<Rational> = f.breakpoints().into_iter().filter(|s| *s >= start && *s <= b).collect();
            cands.push(start);
            cands.push(b.clone());
            let best = cands
                .iter()
                .map(|s| Rational::from_int(rate) * (s - &nu) + Rational::from_int(addend) + f.eval(s).unwrap().as_finite().unwrap())
                .reduce(|x, y| player.pick(x, y))
                .unwrap();
            prop_assert_eq!(out.eval(&nu).unwrap(), ExtValue::finite(best));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn f_is_monotone(g in small_game(), k in 1usize..6, shift in 0i64..4) {
        let c = build_closure(&g);
        let v = iterates(&c).nth(k).unwrap();
        let lowered: Vec<Pwa> = v
            .iter()
            .enumerate()
            .map(|(i, f)| if i % 2 == 0 || c.locations[i].is_target() { f.clone() } else { f.add_const(&-Rational::from_int(shift)) })
            .collect();
        let (fv, fl) = (apply_f(&c, &v).unwrap(), apply_f(&c, &lowered).unwrap());
        for (a, b) in fl.iter().zip(&fv) {
            prop_assert!(pointwise_le(a, b));
        }
    }

    #[test]
    fn iterates_respect_the_lipschitz_bound(g in small_game()) {
        let c = build_closure(&g);
        let it = value_iterate(&c, 12).unwrap();
        let bound = lipschitz_bound(&c);
        prop_assert!(it.max_slopes.iter().all(|s| *s <= bound));
    }

    #[test]
    fn iterates_never_increase(g in small_game()) {
        let c = build_closure(&g);
        let vs: Vec<Vec<Pwa>> = iterates(&c).take(10).collect();
        for w in vs.windows(2) {
            for (next, prev) in w[1].iter().zip(&w[0]) {
                prop_assert!(pointwise_le(next, prev));
            }
        }
    }
}
