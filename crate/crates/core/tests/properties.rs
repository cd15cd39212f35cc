//! Randomised invariants across the symbolic, fiber, attractor, splitting
//! and measure layers.

use num_traits::{One, Zero};
use proptest::prelude::*;

use skewgraph::attractor::{backward_image, bh_step, code, graph_sample, spine, target_set};
use skewgraph::exact::{q, qi, to_f64, Q};
use skewgraph::fiber::{Cuboid, FiberSet, Interval, IntervalUnion, PLMap, SkewSystem};
use skewgraph::measures::{pushforward, wasserstein_d2, EmpiricalMeasure};
use skewgraph::rng;
use skewgraph::splitting::{check_split, decay_estimate, separation_sweep};
use skewgraph::symbolic::{
    disjunctive_prefix, stationary_vector, Cylinder, MarkovSpec, Symbol, SymbolWindow,
};
use skewgraph::zoo::{
    build_binary_ifs, build_middle_third, build_msplits, build_theorem2_family,
    check_theorem2_conditions, ZooMeta,
};

const DEN: i64 = 64;

fn word(k: usize, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec(1..=k as Symbol, len)
}

fn window(k: usize) -> impl Strategy<Value = SymbolWindow> {
    (word(k, 0..12), -6i64..6, word(k, 1..4), word(k, 1..4))
        .prop_map(move |(core, off, l, r)| SymbolWindow::new(k, core, off, l, r).unwrap())
}

/// Increasing PL maps with breakpoints and values on the `1/64` grid.
fn pl_map() -> impl Strategy<Value = PLMap> {
    (
        prop::collection::btree_set(1..DEN, 0..4),
        prop::collection::vec(0..=DEN, 2..6),
    )
        .prop_map(|(inner, mut ys)| {
            let mut xs = vec![qi(0)];
            xs.extend(inner.into_iter().map(|x| q(x, DEN)));
            xs.push(qi(1));
            ys.resize(xs.len(), DEN);
            ys.sort();
            PLMap::new(xs, ys.into_iter().map(|y| q(y, DEN)).collect()).unwrap()
        })
}

fn unit_point() -> impl Strategy<Value = Q> {
    (0..=1000i64).prop_map(|n| q(n, 1000))
}

fn interval() -> impl Strategy<Value = Interval> {
    (0..=1000i64, 0..=1000i64)
        .prop_map(|(a, b)| Interval::new(q(a.min(b), 1000), q(a.max(b), 1000)))
}

fn stochastic(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(1u32..20, k), k).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let s: u32 = r.iter().sum();
                r.into_iter().map(|v| v as f64 / s as f64).collect()
            })
            .collect()
    })
}

fn two_map_system() -> impl Strategy<Value = SkewSystem> {
    (pl_map(), pl_map()).prop_map(|(f, g)| {
        SkewSystem::new(MarkovSpec::uniform(2).unwrap(), vec![f.into(), g.into()]).unwrap()
    })
}

fn d0(a: &SymbolWindow, b: &SymbolWindow) -> f64 {
    a.canonical_distance(b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d0_is_an_ultrametric(a in window(3), b in window(3), c in window(3)) {
        prop_assert_eq!(d0(&a, &b), d0(&b, &a));
        prop_assert_eq!(d0(&a, &a), 0.0);
        prop_assert_eq!(d0(&a, &b) == 0.0, a == b);
        prop_assert!(d0(&a, &c) <= d0(&a, &b).max(d0(&b, &c)));
    }

    #[test]
    fn shift_at_most_doubles_d0(a in window(2), b in window(2), n in -3i64..4) {
        let (sa, sb) = (a.shift(n), b.shift(n));
        prop_assert!(d0(&sa, &sb) <= 2f64.powi(n.abs() as i32) * d0(&a, &b));
        prop_assert_eq!(sa.symbol_at(0), a.symbol_at(n));
    }

    #[test]
    fn stationary_vector_is_invariant(p in (2usize..6).prop_flat_map(stochastic)) {
        let pi = stationary_vector(&p).unwrap();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..p.len() {
            let next: f64 = (0..p.len()).map(|i| pi[i] * p[i][j]).sum();
            prop_assert!((next - pi[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_measures_are_consistent(p in stochastic(3), w in word(3, 1..6), start in -5i64..5) {
        let spec = MarkovSpec::new(p).unwrap();
        let c = Cylinder::new(start, w.clone()).unwrap();
        let children: f64 = (1..=3)
            .map(|s| {
                let mut longer = w.clone();
                longer.push(s);
                Cylinder::new(start, longer).unwrap().measure(&spec)
            })
            .sum();
        prop_assert!((children - c.measure(&spec)).abs() < 1e-12);
        let parents: f64 = (1..=3)
            .map(|s| {
                let mut longer = vec![s];
                longer.extend(&w);
                Cylinder::new(start - 1, longer).unwrap().measure(&spec)
            })
            .sum();
        prop_assert!((parents - c.measure(&spec)).abs() < 1e-12);
    }

    #[test]
    fn composition_order(f in pl_map(), g in pl_map(), h in pl_map(), x in unit_point()) {
        let fg = f.compose_after(&g);
        prop_assert_eq!(fg.eval(&x), f.eval(&g.eval(&x)));
        let left = h.compose_after(&f).compose_after(&g);
        let right = h.compose_after(&f.compose_after(&g));
        prop_assert_eq!(left.eval(&x), right.eval(&x));
    }

    #[test]
    fn word_composition_splits(sys in two_map_system(), a in word(2, 0..5), b in word(2, 0..5), x in unit_point()) {
        let mut ab = a.clone();
        ab.extend(&b);
        let whole = sys.compose(&ab).unwrap().eval(&[x.clone()]);
        let inner = sys.compose(&a).unwrap().eval(&[x.clone()]);
        prop_assert_eq!(&whole, &sys.compose(&b).unwrap().eval(&inner));
        prop_assert_eq!(whole, sys.apply_word(&ab, &[x]).unwrap());
    }

    #[test]
    fn image_of_composition_is_iterated_image(sys in two_map_system(), w in word(2, 1..5), iv in interval()) {
        let set = FiberSet::Intervals(IntervalUnion::from_intervals(vec![iv]));
        let composed = sys.compose(&w).unwrap().image(&set);
        let iterated = w.iter().fold(set, |acc, &s| sys.image(s, &acc));
        prop_assert_eq!(composed, iterated);
    }

    #[test]
    fn image_diameter_bounded_by_lipschitz(f in pl_map(), iv in interval()) {
        let img = iv.image(&f);
        prop_assert!(img.len() <= f.lipschitz_bound() * iv.len());
        prop_assert!(img.len() <= f.lipschitz_on(&iv.lo, &iv.hi) * iv.len());
    }

    #[test]
    fn hutchinson_operator_is_monotone(sys in two_map_system(), a in interval(), b in interval()) {
        let small = FiberSet::Intervals(IntervalUnion::from_intervals(vec![a.clone()]));
        let big = FiberSet::Intervals(IntervalUnion::from_intervals(vec![a, b]));
        prop_assert!(bh_step(&sys, &small).is_subset_of(&bh_step(&sys, &big)));
        let full = sys.full_set();
        let once = bh_step(&sys, &full);
        prop_assert!(once.is_subset_of(&full));
        prop_assert!(bh_step(&sys, &once).is_subset_of(&once));
        prop_assert!(once.component_count() <= 2);
    }

    #[test]
    fn spines_are_nested(sys in two_map_system(), theta in window(2), n in 0usize..12) {
        let full = sys.full_set();
        let shallow = spine(&theta, &sys, &full, n);
        let deep = spine(&theta, &sys, &full, n + 3);
        prop_assert!(deep.is_subset_of(&shallow));
        prop_assert!(!deep.is_empty());
    }

    #[test]
    fn coding_ignores_the_seed_set(theta in window(2), x in unit_point()) {
        let sys = build_binary_ifs().system;
        let tol = 1e-9;
        let rho = to_f64(&code(&theta, &sys, 200, tol).point.unwrap()[0]);
        let past = theta.past(40);
        let whole = backward_image(&sys, &past, &Cuboid::unit(1));
        for seed in [Cuboid::point(&[Q::zero()]), Cuboid::point(&[Q::one()]), Cuboid::point(&[x])] {
            let img = backward_image(&sys, &past, &seed);
            prop_assert!(whole.contains_box(&img));
            let at = to_f64(&img.center()[0]);
            prop_assert!((at - rho).abs() <= to_f64(&whole.diameter()) + tol);
        }
    }

    #[test]
    fn disjunctive_prefix_hits_every_word(len in 1usize..5, w in word(2, 1..5)) {
        let w = &w[..w.len().min(len)];
        let prefix = disjunctive_prefix(2, len);
        prop_assert!(prefix.windows(w.len()).any(|s| s == w));
    }

    #[test]
    fn wasserstein_is_a_metric(seed in 0u64..1000, depth in 0usize..8) {
        let sys = build_msplits(1, 0.5, 0.5).unwrap().system;
        let measure = |s: u64| {
            let support = (0..4)
                .map(|i| {
                    let mut r = rng::stream(s, i);
                    let w = sys.spec().sample_window(3, &mut r);
                    (w, vec![q(rand::Rng::gen_range(&mut r, 0..=16), 16)])
                })
                .collect();
            EmpiricalMeasure::uniform(support).unwrap()
        };
        let (a, b, c) = (measure(seed), measure(seed + 1000), measure(seed + 2000));
        let w = |x: &EmpiricalMeasure, y: &EmpiricalMeasure| wasserstein_d2(x, y, depth).unwrap().distance;
        prop_assert!(w(&a, &a).abs() < 1e-12);
        prop_assert!((w(&a, &b) - w(&b, &a)).abs() < 1e-12);
        prop_assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-12);
    }

    #[test]
    fn pushforward_shifts_bases_and_keeps_weights(seed in 0u64..1000, n in 0usize..10) {
        let sys = build_msplits(2, 0.3, 0.6).unwrap().system;
        let support: Vec<_> = (0..6)
            .map(|i| (sys.spec().sample_window(12, &mut rng::stream(seed, i)), vec![q(1, 3), q(2, 3)]))
            .collect();
        let mu = EmpiricalMeasure::uniform(support).unwrap();
        let pushed = pushforward(&mu, &sys, n);
        for (a, b) in mu.atoms().iter().zip(pushed.atoms()) {
            prop_assert_eq!(&b.window, &a.window.shift(n as i64));
            prop_assert_eq!(&b.weight, &a.weight);
            let mut word = b.window.past(n);
            word.reverse();
            prop_assert_eq!(&b.point, &sys.apply_word(&word, &a.point).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coding_is_equivariant(seed in 0u64..10_000) {
        let tol = 1e-9;
        for sys in [build_binary_ifs().system, build_middle_third().system, build_msplits(1, 0.5, 0.5).unwrap().system] {
            let g = graph_sample(&sys, 20, 80, seed, tol);
            prop_assert!(g.max_residual() <= 2.0 * tol);
        }
    }

    #[test]
    fn split_images_stay_separated(m in 1usize..4, p11 in 0.0f64..1.0, p21 in 0.05f64..0.95, seed in 0u64..1000) {
        let z = build_msplits(m, p11, p21).unwrap();
        let ZooMeta::Splitting { word_a, word_b, .. } = &z.meta else { unreachable!() };
        let cert = check_split(&z.system, word_a, word_b).unwrap();
        prop_assert!(cert.monotone);
        let report = separation_sweep(&z.system, &cert, 50, 15, seed);
        prop_assert_eq!(report.overlaps, 0);
    }

    #[test]
    fn split_systems_contract_on_average(p11 in 0.0f64..0.9, p21 in 0.1f64..0.9, seed in 0u64..1000) {
        let z = build_msplits(1, p11, p21).unwrap();
        let est = decay_estimate(&z.system, &[10, 20, 30, 40, 50, 60], 100, seed).unwrap();
        prop_assert!(est.degenerate || est.fitted_lambda < 1.0);
        prop_assert!(est.mean_diams.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn coverage_integrates_to_mean_length(seed in 0u64..1000, n in 1usize..12) {
        let sys = build_msplits(1, 0.4, 0.7).unwrap().system;
        let grid = 200;
        let samples = 100;
        let mut mean_cover = 0.0;
        for g in 0..grid {
            let x = q(2 * g + 1, 2 * grid);
            mean_cover += skewgraph::splitting::coverage_curve(&sys, &[x], 0, &[n], samples, seed).unwrap()[0];
        }
        mean_cover /= grid as f64;
        let mean_len: f64 = (0..samples)
            .map(|i| {
                let w = sys.spec().sample_with(n, &mut rng::stream(seed, i as u64));
                let iv = w.iter().fold(Interval::unit(), |acc, &s| acc.image(&sys.map(s).factors()[0]));
                to_f64(&iv.len())
            })
            .sum::<f64>()
            / samples as f64;
        prop_assert!((mean_cover - mean_len).abs() <= 1.0 / grid as f64 + 1e-12);
    }
}

#[test]
fn disconnected_family_meets_its_conditions() {
    for m in 1..=4 {
        let z = build_theorem2_family(m).unwrap();
        check_theorem2_conditions(&z).unwrap();
    }
}

#[test]
fn target_sets_are_invariant() {
    for sys in [
        build_middle_third().system,
        build_theorem2_family(2).unwrap().system,
    ] {
        let t = target_set(&sys, 500, 1e-6);
        assert!(t.converged);
        let r = skewgraph::exact::q_from_f64(2.0 * t.resolution.max(1e-6)).unwrap();
        let image = bh_step(&sys, &t.set);
        assert!(image.is_subset_of(&t.set.thickened(&r)));
        assert!(t.set.is_subset_of(&image.thickened(&r)));
    }
}
