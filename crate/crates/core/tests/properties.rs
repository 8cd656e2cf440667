use chainkit::bounds::{
    chaining_sum_bound, holder_constant, lemma_b27_from_count, net_deviation_bound, BoundParams,
    Prefactor,
};
use chainkit::chaining::{dyadic, dyadic_levels, validate_family, ChainingFamily};
use chainkit::covering::{
    covering_number, covering_number_exact, covering_number_greedy, is_cover, CoverOptions,
};
use chainkit::metric_space::FiniteMetricSpace;
use chainkit::pair_reduction::build_pair_set;
use proptest::prelude::*;

fn cloud(max_points: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    (1usize..=3)
        .prop_flat_map(move |m| {
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, m), 2..=max_points)
        })
        .prop_filter_map("coincident points", |pts| {
            FiniteMetricSpace::euclidean(pts).ok()
        })
}

fn params() -> impl Strategy<Value = BoundParams> {
    (
        0.5f64..4.0,
        0.25f64..2.0,
        0.1f64..1.5,
        0.5f64..5.0,
        0.5f64..3.0,
        0.05f64..0.95,
        0.25f64..2.0,
    )
        .prop_map(|(p, t, gap, m, c, frac, diam)| BoundParams {
            m,
            p,
            q: t + gap,
            c,
            t,
            beta: frac * gap / p,
            diam,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_preserves_distances(space in cloud(12), seed in any::<u64>()) {
        let n = space.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let p = space.permuted(&perm).unwrap();
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(p.d(a, b), space.d(perm[a], perm[b]));
            }
        }
        prop_assert_eq!(p.diameter(), space.diameter());
        prop_assert_eq!(p.min_gap().unwrap(), space.min_gap().unwrap());
        let eta = space.diameter() / 3.0;
        let opts = CoverOptions::exact();
        prop_assert_eq!(
            covering_number(&p, eta, &opts).unwrap().count,
            covering_number(&space, eta, &opts).unwrap().count
        );
    }

    #[test]
    fn gap_below_diameter(space in cloud(16)) {
        prop_assert!(space.min_gap().unwrap() <= space.diameter());
        prop_assert!(space.min_gap().unwrap() > 0.0);
    }

    #[test]
    fn covering_extremes_and_monotonicity(space in cloud(14), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let n = space.len();
        let diam = space.diameter();
        let gap = space.min_gap().unwrap();
        prop_assert_eq!(covering_number_exact(&space, diam, 24).unwrap().count, 1);
        prop_assert_eq!(covering_number_exact(&space, gap * 0.999, 24).unwrap().count, n);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let n_lo = covering_number_exact(&space, lo * diam, 24).unwrap();
        let n_hi = covering_number_exact(&space, hi * diam, 24).unwrap();
        prop_assert!(n_hi.count <= n_lo.count);
        prop_assert!(is_cover(&space, lo * diam, &n_lo.centers));
        let greedy = covering_number_greedy(&space, lo * diam).unwrap();
        prop_assert!(is_cover(&space, lo * diam, &greedy.centers));
        prop_assert!(greedy.count >= n_lo.count);
    }

    #[test]
    fn family_is_valid_and_deterministic(space in cloud(14), greedy in any::<bool>()) {
        let opts = if greedy { CoverOptions::greedy() } else { CoverOptions::exact() };
        let f = ChainingFamily::build(&space, &opts).unwrap();
        let report = validate_family(&space, &f).unwrap();
        prop_assert!(report.all_pass(), "{:?}", report);
        prop_assert_eq!(&ChainingFamily::build(&space, &opts).unwrap(), &f);
        let (n0, n1) = dyadic_levels(&space).unwrap();
        prop_assert!(space.diameter() <= dyadic(n0));
        prop_assert!(dyadic(n1) < space.min_gap().unwrap());
        prop_assert_eq!(f.nets[&n0].len(), 1);
        prop_assert_eq!(f.nets[&n1].len(), space.len());
        for i in 0..space.len() {
            let chain = f.chain(i, n0).unwrap();
            prop_assert_eq!(chain.len() as i32, n1 - n0 + 1);
            prop_assert_eq!(*chain.last().unwrap(), i);
        }
    }

    #[test]
    fn pair_set_invariants(
        space in cloud(18),
        a in 1.5f64..3.0,
        frac in 0.05f64..1.0,
        values in prop::collection::vec(-5.0f64..5.0, 18 * 2),
    ) {
        let n = space.len();
        let r = ((n as f64).ln() / a.ln()).ceil().max(1.0) as u32;
        let c = frac * space.diameter();
        let u = build_pair_set(&space, a, r, c).unwrap();
        for check in u.check_invariants(&space) {
            prop_assert!(check.pass, "{}: {}", check.name, check.detail);
        }
        for dim in [1, 2] {
            let dom = u.check_domination(&space, &values[..n * dim], dim, c).unwrap();
            prop_assert!(dom.pass, "{:?}", dom);
        }
    }

    #[test]
    fn lemma_bound_monotone(pr in params(), n4 in 1usize..200, d1 in 0.01f64..1.0, d2 in 0.01f64..1.0) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let s = |n, d| lemma_b27_from_count(n, d, &pr, Prefactor::Statement).unwrap();
        prop_assert!(s(n4, lo) <= s(n4, hi));
        prop_assert!(s(n4, hi) <= s(n4 + 1, hi));
        prop_assert!(s(n4, hi) > 0.0);
    }

    #[test]
    fn deviation_and_chaining_monotone(pr in params(), n1 in -2i32..6, cards in prop::collection::vec(1usize..50, 12)) {
        let mut prev = 0.0;
        for n in (n1 - 5..n1).rev() {
            let v = net_deviation_bound(n, n1, &pr).unwrap();
            prop_assert!(v > 0.0 && v.is_finite());
            if n >= 0 || n1 <= 0 {
                prop_assert!(v >= prev * (1.0 - 1e-12));
            }
            prev = v;
        }
        let lc = chainkit::chaining::LevelCards { first_level: n1 - 6, cards };
        let mut prev = 0.0;
        for n in (n1 - 5..n1).rev() {
            let v = chaining_sum_bound(&lc, n, n1, pr.m, pr.p, pr.q).unwrap();
            prop_assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn holder_constant_consistent(pr in params()) {
        match holder_constant(&pr, 1e-10) {
            Ok(h) => {
                prop_assert!(h.l1 > 0.0 && h.l2 > 0.0);
                prop_assert!((h.l - h.l1 - h.l2).abs() <= 1e-12 * h.l);
                prop_assert!(h.tail_bound <= 1e-10 * h.l1);
            }
            Err(e) => prop_assert!(matches!(e, chainkit::Error::NonconvergentLog(_))),
        }
    }
}
