use anm_core::graph::enumerate_dags;
use anm_core::search::neighbors;
use anm_core::simgen::{nonlinearity, transform_noise};
use anm_core::smooth::fit_local_poly;
use anm_core::{
    exhaustive_search, greedy_search, sample_anm, shd, AnmSpec, Dag, Dataset, NoiseSpec, ScoreConfig, Scorer,
    SmootherConfig,
};
use proptest::prelude::*;

fn dag4() -> impl Strategy<Value = Dag> {
    // Random upper-triangular edge set under a random vertex relabelling.
    (proptest::collection::vec(any::<bool>(), 6), Just((0..4usize).collect::<Vec<_>>()).prop_shuffle()).prop_map(
        |(bits, perm)| {
            let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
            let edges: Vec<(usize, usize)> =
                pairs.iter().zip(bits).filter(|(_, b)| *b).map(|(&(u, v), _)| (perm[u], perm[v])).collect();
            Dag::new(4, &edges).unwrap()
        },
    )
}

fn three_node_data(seed: u64, n: usize) -> Dataset {
    let dag = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
    let mut rng = anm_core::simgen::rng_from_seed(seed);
    let spec = AnmSpec::random(dag, 0.2, 0.4, NoiseSpec::Gaussian { sd: 1.0 }, &mut rng).unwrap();
    sample_anm(&spec, n, seed + 1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shd_is_a_metric(a in dag4(), b in dag4(), c in dag4()) {
        prop_assert_eq!(shd(&a, &a).unwrap(), 0);
        prop_assert_eq!(shd(&a, &b).unwrap(), shd(&b, &a).unwrap());
        prop_assert_eq!(shd(&a, &b).unwrap() == 0, a == b);
        prop_assert!(shd(&a, &c).unwrap() <= shd(&a, &b).unwrap() + shd(&b, &c).unwrap());
    }

    #[test]
    fn dag_json_round_trip(a in dag4()) {
        let text = serde_json::to_string(&a).unwrap();
        let back: Dag = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(a, back);
    }

    #[test]
    fn neighbors_stay_acyclic_and_one_step_away(a in dag4()) {
        for g in neighbors(&a) {
            prop_assert!(g.is_acyclic());
            prop_assert_eq!(shd(&a, &g).unwrap(), 1);
        }
    }

    #[test]
    fn local_linear_reproduces_affine(
        slope in -10.0f64..10.0,
        intercept in -10.0f64..10.0,
        xs in proptest::collection::vec(-5.0f64..5.0, 20..60),
        span in 0.2f64..1.0,
    ) {
        let mut distinct = xs.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        prop_assume!(distinct.len() >= 5 && distinct[distinct.len() - 1] - distinct[0] > 0.5);
        let y: Vec<f64> = xs.iter().map(|x| slope * x + intercept).collect();
        let cfg = SmootherConfig { span, degree: 1, ..SmootherConfig::default() };
        let fit = fit_local_poly(&xs, &y, &cfg).unwrap();
        for (f, t) in fit.fitted().iter().zip(&y) {
            prop_assert!((f - t).abs() < 1e-8 * (1.0 + t.abs()), "{} vs {}", f, t);
        }
    }

    #[test]
    fn nonlinearity_is_scale_invariant(c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], k in 1.0f64..4.0) {
        let f = |x: f64| (k * x).sin() + 0.3 * x;
        let g = |x: f64| c * f(x);
        prop_assert!((nonlinearity(f) - nonlinearity(g)).abs() < 1e-10);
        prop_assert!(nonlinearity(|x| c * x - k) == 0.0);
    }

    #[test]
    fn unit_power_keeps_noise_bitwise(v in proptest::collection::vec(-1e3f64..1e3, 0..50)) {
        let out = transform_noise(&v, 1.0);
        prop_assert_eq!(out.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dag_score_is_sum_of_families(seed in 0u64..1000) {
        let data = three_node_data(seed, 80);
        let scorer = Scorer::new(&data, ScoreConfig::default());
        for dag in enumerate_dags(3).unwrap() {
            let s = scorer.score_dag(&dag).unwrap();
            let mut sum = 0.0;
            for v in 0..3 {
                sum += scorer.family_score(v, dag.parent_mask(v)).unwrap().loglik;
            }
            prop_assert_eq!(s.loglik.to_bits(), sum.to_bits());
            prop_assert_eq!(s.total.to_bits(), (sum - s.penalty).to_bits());
        }
    }

    #[test]
    fn greedy_ends_in_a_local_optimum(seed in 0u64..1000) {
        let data = three_node_data(seed, 120);
        let cfg = ScoreConfig::default();
        let greedy = greedy_search(&data, &cfg).unwrap();
        let exhaustive = exhaustive_search(&data, &cfg).unwrap();
        let best = greedy.best();
        prop_assert!(best.score.total <= exhaustive.best().score.total);
        for g in neighbors(&best.dag) {
            prop_assert!(exhaustive.score_of(&g).unwrap().total <= best.score.total);
        }
        prop_assert_eq!(exhaustive.score_of(&best.dag).unwrap(), &best.score);
    }
}

#[test]
fn greedy_matches_exhaustive_on_strong_two_node_signal() {
    let cfg = ScoreConfig::default();
    for seed in 0..5 {
        let data = anm_core::gen_cubic(200, 1.0, 1.0, seed).unwrap();
        let g = greedy_search(&data, &cfg).unwrap();
        let e = exhaustive_search(&data, &cfg).unwrap();
        assert_eq!(g.best().dag, e.best().dag, "seed {seed}");
        assert_eq!(g.best().score, e.best().score);
    }
}
