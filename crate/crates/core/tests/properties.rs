use std::collections::BTreeMap;

use proptest::prelude::*;

use pagepar::bench::{generate_tree, SyntheticTreeSpec};
use pagepar::dom::{compute_features, parse_html, width_profile};
use pagepar::labeling::{
    performance_energy_label, performance_label, Pet, PetBucketConfig, SERIAL,
};
use pagepar::learn::{pearson_r, softmax};
use pagepar::measurements::{greenups, mad, median, speedups, AggregatedMeasurement, RatioSet};

fn tree_spec() -> impl Strategy<Value = SyntheticTreeSpec> {
    (1usize..400, 1usize..5, 0usize..8, 0.0f64..=1.0, any::<u64>()).prop_map(
        |(n, min, extra, bias, seed)| SyntheticTreeSpec {
            target_node_count: n,
            min_children: min,
            max_children: min + extra,
            depth_bias: bias,
            seed,
        },
    )
}

fn pet_set() -> impl Strategy<Value = Vec<Pet>> {
    prop::collection::vec((0.5f64..3.0, 0.5f64..1.5), 1..4).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (p, e))| Pet { threads: 2 << i, speedup: p, greenup: e })
            .collect()
    })
}

fn speedup_set(pets: &[Pet]) -> RatioSet {
    let mut entries: BTreeMap<usize, f64> = pets.iter().map(|p| (p.threads, p.speedup)).collect();
    entries.insert(SERIAL, 1.0);
    RatioSet { page_id: "p".into(), entries }
}

fn aggs(style: &[f64], energy: &[f64]) -> Vec<AggregatedMeasurement> {
    style
        .iter()
        .zip(energy)
        .enumerate()
        .map(|(i, (&s, &e))| AggregatedMeasurement {
            page_id: "p".into(),
            threads: 1 << i,
            median_style_ms: s,
            mad_style_ms: 0.0,
            median_layout_ms: 0.0,
            median_energy_j: Some(e),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn width_profile_and_leaves(spec in tree_spec()) {
        let tree = generate_tree(&spec).unwrap();
        let f = compute_features(&tree, "t");
        let profile = width_profile(&tree);
        prop_assert_eq!(profile.total(), f.dom_size);
        let internal = tree.nodes().iter().filter(|n| !n.children.is_empty()).count() as u64;
        prop_assert_eq!(f.number_of_leaves, f.dom_size - internal);
        prop_assert!(f.max_avg_width_ratio >= 1.0);
        let uniform = profile.widths.iter().all(|&w| w == profile.widths[0]);
        prop_assert_eq!(f.max_avg_width_ratio == 1.0, uniform);
    }

    #[test]
    fn parsing_is_deterministic(spec in tree_spec()) {
        let html = generate_tree(&spec).unwrap().to_html();
        let a = parse_html(&html).unwrap();
        let b = parse_html(&html).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(compute_features(&a, "x"), compute_features(&b, "x"));
        prop_assert_eq!(a.source_byte_size(), html.len());
    }

    #[test]
    fn median_and_mad_ignore_order(mut v in prop::collection::vec(0.0f64..1e4, 1..40), seed in any::<u64>()) {
        let (m, d) = (median(&v), mad(&v));
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(v.as_mut_slice(), &mut rng);
        prop_assert_eq!(median(&v), m);
        prop_assert_eq!(mad(&v), d);
    }

    #[test]
    fn ratios_are_scale_invariant(
        style in prop::collection::vec(0.1f64..500.0, 3),
        energy in prop::collection::vec(0.1f64..500.0, 3),
        c in prop::sample::select(vec![0.1, 7.0, 1000.0]),
    ) {
        let base = aggs(&style, &energy);
        let scaled_style: Vec<f64> = style.iter().map(|x| x * c).collect();
        let scaled_energy: Vec<f64> = energy.iter().map(|x| x * c).collect();
        let scaled = aggs(&scaled_style, &scaled_energy);
        let (p, q) = (speedups(&base).unwrap(), speedups(&scaled).unwrap());
        let (e, f) = (greenups(&base).unwrap(), greenups(&scaled).unwrap());
        for t in [1, 2, 4] {
            prop_assert!((p.get(t).unwrap() - q.get(t).unwrap()).abs() <= 1e-12 * p.get(t).unwrap());
            prop_assert!((e.get(t).unwrap() - f.get(t).unwrap()).abs() <= 1e-12 * e.get(t).unwrap());
        }
        prop_assert_eq!(
            performance_label(&p, 1.1),
            performance_label(&q, 1.1)
        );
    }

    #[test]
    fn pearson_symmetric_and_affine_invariant(
        xy in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
        a in 0.5f64..20.0,
        b in -50.0f64..50.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        if let (Ok(r), Ok(s)) = (pearson_r(&x, &y), pearson_r(&y, &x)) {
            prop_assert!((r - s).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r));
            let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            if let Ok(ra) = pearson_r(&ax, &y) {
                prop_assert!((ra - r).abs() < 1e-9, "{} vs {}", ra, r);
            }
            let neg: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
            if let Ok(rn) = pearson_r(&neg, &y) {
                prop_assert!((rn + r).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn perf_energy_label_is_always_significant(pets in pet_set()) {
        let config = PetBucketConfig::default();
        let label = performance_energy_label(&pets, &config);
        if label != SERIAL {
            let pet = pets.iter().find(|p| p.threads == label).unwrap();
            prop_assert!(pet.speedup > config.p_min());
        }
    }

    #[test]
    fn raising_a_greenup_moves_toward_that_config(pets in pet_set(), which in any::<prop::sample::Index>(), bump in 0.0f64..1.0) {
        let config = PetBucketConfig::default();
        let before = performance_energy_label(&pets, &config);
        let i = which.index(pets.len());
        let mut raised = pets.clone();
        raised[i].greenup += bump;
        let after = performance_energy_label(&raised, &config);
        prop_assert!(after == before || after == pets[i].threads, "{} -> {}", before, after);
    }

    #[test]
    fn degenerate_buckets_reduce_to_performance_label(pets in pet_set(), p_min in 1.01f64..2.0) {
        let config = PetBucketConfig::new(vec![p_min, f64::INFINITY], vec![0.0]).unwrap();
        prop_assert_eq!(
            performance_energy_label(&pets, &config),
            performance_label(&speedup_set(&pets), p_min)
        );
    }

    #[test]
    fn softmax_is_a_distribution(scores in prop::collection::vec(-800.0f64..800.0, 1..8)) {
        let p = softmax(&scores);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
