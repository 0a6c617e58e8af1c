use std::sync::OnceLock;

use gerrygrid_core::districting::is_legal;
use gerrygrid_core::enumeration::Distributions;
use gerrygrid_core::symmetry::SquareSymmetries;
use gerrygrid_core::*;
use proptest::prelude::*;

fn plans(n: usize) -> &'static PlanSet {
    static P4: OnceLock<PlanSet> = OnceLock::new();
    static P5: OnceLock<PlanSet> = OnceLock::new();
    match n {
        4 => P4.get_or_init(|| enumerate_plans(4).unwrap()),
        5 => P5.get_or_init(|| enumerate_plans(5).unwrap()),
        _ => unreachable!(),
    }
}

fn dist25() -> impl Strategy<Value = VoterDistribution> {
    (0u64..1 << 25).prop_map(|b| VoterDistribution::new(b, 25).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn complement_seats_sum_to_district_count(d in dist25()) {
        let a = rep_stats(d, plans(5)).unwrap();
        let b = rep_stats(d.complement(), plans(5)).unwrap();
        prop_assert_eq!(a.half_sum() + b.half_sum(), 2 * 5 * plans(5).len() as u64);
    }

    #[test]
    fn odd_districts_never_tie(d in dist25()) {
        let s = rep_stats(d, plans(5)).unwrap();
        prop_assert!(s.histogram().iter().skip(1).step_by(2).all(|&c| c == 0));
    }

    #[test]
    fn rep_stats_invariant_under_symmetry(d in dist25(), s in 0usize..8) {
        let syms = SquareSymmetries::new(5).unwrap();
        let image = VoterDistribution::new(syms.apply(s, d.bits()), 25).unwrap();
        prop_assert_eq!(rep_stats(d, plans(5)).unwrap(), rep_stats(image, plans(5)).unwrap());
    }

    #[test]
    fn adding_a_dot_never_loses_seats(d in dist25(), b in 0usize..25) {
        prop_assume!(!d.get(b));
        let before = rep_stats(d, plans(5)).unwrap();
        let after = rep_stats(d.with(b, true), plans(5)).unwrap();
        prop_assert!(after.half_sum() >= before.half_sum());
        prop_assert!(after.min() >= before.min() && after.max() >= before.max());
    }

    #[test]
    fn clustering_scores_are_fractions(d in dist25()) {
        let g = DualGraph::square(5).unwrap();
        let c = clus(&g, d).unwrap();
        prop_assert!(c.numer() <= c.denom());
        match clusp(&g, d) {
            Ok(p) => prop_assert!(p.numer() <= p.denom() && d.num() > 0),
            Err(Error::UndefinedMetric(_)) => prop_assert_eq!(d.num(), 0),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn canonical_form_is_orbit_minimum(d in dist25(), s in 0usize..8) {
        let syms = SquareSymmetries::new(5).unwrap();
        let c = syms.canonical(d.bits());
        prop_assert_eq!(syms.canonical(c), c);
        prop_assert_eq!(syms.canonical(syms.apply(s, d.bits())), c);
        prop_assert!(c <= d.bits());
        prop_assert_eq!(c.count_ones(), d.num());
        prop_assert!(matches!(syms.orbit_size(d.bits()), 1 | 2 | 4 | 8));
    }

    #[test]
    fn moves_preserve_dot_count(d in dist25(), theta in 0.0f64..=1.0, n_swap in 2usize..=25, seed: u64) {
        let g = DualGraph::square(5).unwrap();
        let mut r = rng::seeded(seed);
        prop_assert_eq!(evolve(&g, d, theta, &mut r).num(), d.num());
        prop_assert_eq!(step_random(d, n_swap, &mut r).unwrap().num(), d.num());
    }

    #[test]
    fn ranges_partition_fixed_popcount_stream(num in 0u32..=12, cut in 0u64..1 << 12) {
        let whole: Vec<u64> = Distributions::range(12, Some(num), 0, 1 << 12).unwrap().map(|d| d.bits()).collect();
        let mut parts: Vec<u64> = Distributions::range(12, Some(num), 0, cut).unwrap().map(|d| d.bits()).collect();
        parts.extend(Distributions::range(12, Some(num), cut, 1 << 12).unwrap().map(|d| d.bits()));
        prop_assert_eq!(&parts, &whole);
        prop_assert!(whole.iter().all(|b| b.count_ones() == num));
    }

    #[test]
    fn slope_accumulator_merge_is_order_free(
        pts in prop::collection::vec((0.0f64..=1.0, 0.0f64..=5.0), 1..60),
        cut in 0usize..60,
    ) {
        let cut = cut.min(pts.len());
        let mut whole = SlopeAccumulator::new();
        pts.iter().for_each(|&(x, y)| whole.add(x, y));
        let (mut a, mut b) = (SlopeAccumulator::new(), SlopeAccumulator::new());
        pts[..cut].iter().for_each(|&(x, y)| a.add(x, y));
        pts[cut..].iter().rev().for_each(|&(x, y)| b.add(x, y));
        b.merge(&a);
        prop_assert_eq!(b, whole);
        let (s1, _) = whole.fit().unwrap();
        let (s2, _) = ols_slope(&pts).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-6 * (1.0 + s2.abs()), "{s1} vs {s2}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn best_so_far_is_monotone(seed: u64, num in 0usize..=16, alg in 0usize..4) {
        let g = DualGraph::square(4).unwrap();
        let e = Evaluator::exact(plans(4)).unwrap();
        let cfg = OptimizerConfig { k_max: 60, seed, ..Default::default() };
        let r = Algorithm::ALL[alg].run(&e, &g, num, &cfg).unwrap();
        prop_assert!(r.best_so_far.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(r.evaluations() <= 60);
        prop_assert_eq!(*r.best_so_far.last().unwrap(), r.best_score);
        prop_assert_eq!(r.best_distribution.num() as usize, num);
        prop_assert_eq!(e.eval(r.best_distribution).unwrap(), r.best_score);
    }

    #[test]
    fn chain_stays_within_plan_set(seed: u64) {
        let g = DualGraph::square(4).unwrap();
        let start = plans(4).plans()[0].clone();
        let mut state = ChainState::new(&g, &start, rng::seeded(seed)).unwrap();
        for _ in 0..200 {
            state.step(&g);
            let p = state.plan();
            prop_assert!(is_legal(&g, &p));
            prop_assert!(plans(4).contains(&p));
        }
    }
}

#[test]
fn plan_sets_are_closed_under_symmetry() {
    for n in [4, 5] {
        let set = plans(n);
        for p in set.plans() {
            for s in Symmetry::ALL {
                assert!(set.contains(&s.apply_plan(p, n)), "{p} under {s:?}");
            }
        }
    }
}

#[test]
fn five_by_five_plan_count() {
    assert_eq!(plans(5).len(), 4006);
    assert_eq!(plans(5).n_districts(), 5);
}
