use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qas_core::carnot::{signature_level2, tangent_distance, PiecewiseLinearPath, Step2GroupElement};
use qas_core::experiment::invariants::{random_graph_metric, random_measure};
use qas_core::experiment::{ExperimentKind, ExperimentReport};
use qas_core::experiment::report::PointRecord;
use qas_core::measure::{w1_discrete, w1_to_dirac};
use qas_core::metric::{snowflake_distance, Modulus};
use qas_core::numerics::{ceil_index, is_in_simplex, project_simplex, softmax};
use qas_core::oracle;
use qas_core::qas::{check_mixing_inequality, Euclidean, Norm, MIXING_SLACK};
use qas_core::DiscreteMeasure;

fn vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..=max_len)
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

fn step2() -> impl Strategy<Value = Step2GroupElement> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_map(|(a, b, c)| Step2GroupElement::new(vec![a, b], vec![vec![0.0, c], vec![-c, 0.0]]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_lands_in_simplex_and_is_idempotent(v in vector(8)) {
        let p = project_simplex(&v).unwrap();
        prop_assert!(is_in_simplex(&p, 1e-12));
        let again = project_simplex(&p).unwrap();
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in p.iter().zip(&oracle::simplex_projection_active_set(&v)) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn softmax_ignores_constant_shifts(v in vector(6), c in -100.0..100.0f64) {
        let a = softmax(&v).unwrap();
        let b = softmax(&v.iter().map(|x| x + c).collect::<Vec<_>>()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn ceil_index_stays_in_range(z in -50.0..50.0f64, q in 1usize..20) {
        let c = ceil_index(z, q);
        prop_assert!((1..=q).contains(&c.index));
        prop_assert_eq!(c.clamped, z.ceil() < 1.0 || z.ceil() > q as f64);
    }

    #[test]
    fn w1_is_a_metric_on_measures(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph_metric(n, &mut rng);
        let (a, b, c) = (random_measure(n, 5, &mut rng), random_measure(n, 5, &mut rng), random_measure(n, 5, &mut rng));
        let ab = w1_discrete(&g, &a, &b).unwrap();
        let ba = w1_discrete(&g, &b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert!(w1_discrete(&g, &a, &a).unwrap().abs() <= 1e-12);
        let ac = w1_discrete(&g, &a, &c).unwrap();
        let bc = w1_discrete(&g, &b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn w1_to_dirac_is_the_expected_distance(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph_metric(n, &mut rng);
        let mu = random_measure(n, 8, &mut rng);
        for y in 0..n {
            let cost: Vec<Vec<f64>> = mu.atoms().iter().map(|&a| vec![g.d(a, y)]).collect();
            let lp = oracle::w1_lp(&cost, mu.weights(), &[1.0]);
            prop_assert!((w1_to_dirac(&g, &mu, y).unwrap() - lp).abs() <= 1e-9);
        }
    }

    #[test]
    fn power_snowflakes_stay_metric(seed in any::<u64>(), n in 2usize..14, alpha in 0.05..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph_metric(n, &mut rng);
        let s = snowflake_distance(&Modulus::power(alpha), &g).unwrap();
        prop_assert!(s.check_triangle().is_ok());
    }

    #[test]
    fn euclidean_mixing_inequality(
        pts in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 1..6),
        seed in any::<u64>(),
    ) {
        let w = {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            qas_core::experiment::invariants::random_simplex(pts.len(), &mut rng)
        };
        let space = Euclidean::new(3, Norm::L2);
        for i in 0..pts.len() {
            let c = check_mixing_inequality(&space, &w, &pts, i).unwrap();
            prop_assert!(c.lhs <= c.rhs + MIXING_SLACK);
        }
    }

    #[test]
    fn measure_weights_stay_normalized(w in weights(5)) {
        let mu = DiscreteMeasure::new(vec![0usize, 1, 2, 1, 0], w).unwrap();
        let merged = mu.merged();
        prop_assert!((merged.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(merged.len() <= 3);
    }

    #[test]
    fn group_inverse_and_dilation(g in step2(), h in step2(), lambda in 0.1..3.0f64) {
        let e = g.multiply(&g.inverse()).unwrap();
        prop_assert!(tangent_distance(&e, &Step2GroupElement::identity(2)) <= 1e-12);
        let lhs = g.multiply(&h).unwrap().dilate(lambda);
        let rhs = g.dilate(lambda).multiply(&h.dilate(lambda)).unwrap();
        prop_assert!(tangent_distance(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn chen_identity_on_random_paths(
        verts in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 2), 2..7),
        u in 0.0..1.0f64,
    ) {
        let p = PiecewiseLinearPath::from_vertices(verts).unwrap();
        let (lo, hi) = p.domain();
        let mid = lo + u * (hi - lo);
        let split = signature_level2(&p, lo, mid).unwrap().multiply(&signature_level2(&p, mid, hi).unwrap()).unwrap();
        prop_assert!(tangent_distance(&split, &signature_level2(&p, lo, hi).unwrap()) <= 1e-12);
    }

    #[test]
    fn report_json_round_trips(errors in prop::collection::vec(0.0..10.0f64, 0..20), seed in any::<u64>()) {
        let mut r = ExperimentReport::new(ExperimentKind::GraphMap, seed);
        r.points = errors
            .iter()
            .enumerate()
            .map(|(id, &error)| PointRecord { id, error, certified: id % 2 == 0, part: (id % 3 != 0).then_some(id % 3) })
            .collect();
        let r = r.finish();
        prop_assert_eq!(ExperimentReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}
