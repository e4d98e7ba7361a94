use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treedist::distance::{distance, edit_distance};
use treedist::editable::PiecewiseMap;
use treedist::experiments::DistanceMatrix;
use treedist::io;
use treedist::pruning::prune;
use treedist::random::{random_dendrogram, random_map, MapShape};
use treedist::Dendrogram;

const TOL: f64 = 1e-9;

fn shape(i: u8) -> MapShape {
    MapShape {
        affine: i & 1 == 1,
        channels: 1 + usize::from(i & 2 == 2),
        ..MapShape::default()
    }
}

fn maps(seed: u64, kind: u8, n: usize) -> Vec<PiecewiseMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_map(&mut rng, &shape(kind))).collect()
}

fn trees(seed: u64, kind: u8, n: usize, edges: usize) -> Vec<Dendrogram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_dendrogram(&mut rng, edges, &shape(kind))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sum_is_commutative_and_associative(seed in any::<u64>(), kind in 0u8..4) {
        let m = maps(seed, kind, 3);
        let ab = m[0].add(&m[1]).unwrap();
        prop_assert!(ab.l1_distance(&m[1].add(&m[0]).unwrap()).unwrap() <= TOL);
        let left = ab.add(&m[2]).unwrap();
        let right = m[0].add(&m[1].add(&m[2]).unwrap()).unwrap();
        prop_assert!(left.l1_distance(&right).unwrap() <= TOL);
    }

    #[test]
    fn norm_is_additive_and_distance_translation_invariant(seed in any::<u64>(), kind in 0u8..4) {
        let m = maps(seed, kind, 3);
        let ab = m[0].add(&m[1]).unwrap();
        prop_assert!((ab.norm() - m[0].norm() - m[1].norm()).abs() <= TOL);
        let shifted = m[2].add(&m[0]).unwrap().l1_distance(&m[2].add(&m[1]).unwrap()).unwrap();
        prop_assert!((shifted - m[0].l1_distance(&m[1]).unwrap()).abs() <= TOL);
    }

    #[test]
    fn map_distance_is_a_metric(seed in any::<u64>(), kind in 0u8..4) {
        let m = maps(seed, kind, 3);
        let d = |i: usize, j: usize| m[i].l1_distance(&m[j]).unwrap();
        prop_assert_eq!(d(0, 0), 0.0);
        prop_assert!((d(0, 1) - d(1, 0)).abs() <= TOL);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + TOL);
    }

    #[test]
    fn restriction_splits_the_norm(seed in any::<u64>(), kind in 0u8..4, at in 0.0f64..5.0, c in 0.0f64..4.0) {
        let m = &maps(seed, kind, 1)[0];
        let below = m.restrict(f64::NEG_INFINITY, at);
        let above = m.restrict(at, f64::INFINITY);
        prop_assert!((below.norm() + above.norm() - m.norm()).abs() <= TOL);
        prop_assert!(below.add(&above).unwrap().l1_distance(m).unwrap() <= TOL);
        prop_assert!((m.scale(c).norm() - c * m.norm()).abs() <= TOL * (1.0 + c));
    }

    #[test]
    fn dendrogram_distance_is_bounded_by_norms(seed in any::<u64>(), kind in 0u8..4) {
        let t = trees(seed, kind, 2, 6);
        let d = distance(&t[0], &t[1]).unwrap();
        let (na, nb) = (t[0].tree_norm(), t[1].tree_norm());
        prop_assert!(d >= (na - nb).abs() - TOL);
        prop_assert!(d <= na + nb + TOL);
    }

    #[test]
    fn witness_plan_costs_the_distance(seed in any::<u64>(), kind in 0u8..4) {
        let t = trees(seed, kind, 2, 7);
        let (d, plan) = edit_distance(&t[0], &t[1]).unwrap();
        prop_assert!((plan.evaluate(&t[0], &t[1]).unwrap() - d).abs() <= TOL);
        let swapped = distance(&t[1], &t[0]).unwrap();
        prop_assert!((swapped - d).abs() <= TOL);
    }

    #[test]
    fn canonical_form_is_idempotent_and_free(seed in any::<u64>(), kind in 0u8..4) {
        let t = &trees(seed, kind, 1, 7)[0];
        let c = t.canonicalize();
        prop_assert_eq!(c.canonicalize(), c.clone());
        prop_assert!(distance(t, &c).unwrap() <= TOL);
        prop_assert!(c.validate().is_empty());
    }

    #[test]
    fn binarizing_costs_almost_nothing(seed in any::<u64>(), kind in 0u8..4) {
        let t = &trees(seed, kind, 1, 7)[0];
        let b = t.binarize(None).unwrap();
        let st = b.structure();
        prop_assert!((0..st.len()).all(|v| st.children(v).len() <= 2));
        prop_assert!(distance(t, &b).unwrap() <= TOL);
    }

    #[test]
    fn dendrogram_json_round_trips(seed in any::<u64>(), kind in 0u8..4) {
        let t = &trees(seed, kind, 1, 7)[0];
        let back = io::parse_dendrogram(&io::dendrogram_to_string(t)).unwrap();
        prop_assert_eq!(&back, t);
    }

    #[test]
    fn plan_json_round_trips(seed in any::<u64>(), kind in 0u8..4) {
        let t = trees(seed, kind, 2, 5);
        let (_, plan) = edit_distance(&t[0], &t[1]).unwrap();
        prop_assert_eq!(io::parse_plan(&io::plan_to_string(&plan)).unwrap(), plan);
    }

    #[test]
    fn matrix_csv_round_trips(values in proptest::collection::vec(0.0f64..1e6, 10)) {
        let labels: Vec<String> = (0..5).map(|i| format!("item {i}")).collect();
        let m = DistanceMatrix::from_upper(labels, &values).unwrap();
        prop_assert_eq!(io::parse_matrix(&io::matrix_to_csv(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn pruning_error_grows_with_the_threshold(seed in any::<u64>(), kind in 0u8..4, e1 in 0.0f64..8.0, e2 in 0.0f64..8.0) {
        let t = &trees(seed, kind, 1, 8)[0];
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let (a, b) = (prune(t, lo, seed), prune(t, hi, seed));
        prop_assert!(a.pruning_error <= b.pruning_error + TOL);
        prop_assert!(b.pruned.validate().is_empty());
    }
}

#[test]
fn parser_seeds_are_valid() {
    io::parse_dendrogram(SEEDS[0]).unwrap();
    io::parse_betti(SEEDS[1]).unwrap();
    io::parse_field(SEEDS[2]).unwrap();
    io::parse_matrix(SEEDS[3]).unwrap();
}

const SEEDS: [&str; 4] = [
    r#"{"format_version":1,"root":"r","vertices":[{"id":"r","height":null},{"id":"a","height":null}],"edges":[{"child":"a","parent":"r","weight":{"channels":1,"pieces":[{"start":0,"end":1,"kind":"const","value":[1]}]}}]}"#,
    r#"{"format_version":1,"dimension":1,"entries":{"s":[1,0],"a":[{"from":0,"betti":[1,0]},{"from":1,"betti":[1,1]}]}}"#,
    "x,y\n-1,1\n0,0\n1,2.5\n",
    "label,a,b\na,0,1.5\nb,1.5,0\n",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parsers_reject_mangled_input_without_panicking(
        which in 0usize..4,
        cut in 0usize..200,
        flips in proptest::collection::vec((0usize..200, any::<u8>()), 0..4),
    ) {
        let mut bytes = SEEDS[which].as_bytes().to_vec();
        for (at, b) in flips {
            if !bytes.is_empty() {
                let i = at % bytes.len();
                bytes[i] = b;
            }
        }
        bytes.truncate(cut.max(1));
        let text = String::from_utf8_lossy(&bytes);
        let _ = io::parse_dendrogram(&text);
        let _ = io::parse_plan(&text);
        let _ = io::parse_betti(&text);
        let _ = io::parse_field(&text);
        let _ = io::parse_cloud(&text);
        let _ = io::parse_matrix(&text);
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
            let _ = io::map_from_json(&v, "$");
        }
    }
}
