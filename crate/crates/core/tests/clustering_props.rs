use proptest::prelude::*;

use bikelink::clustering::{
    adatc_plus, apportion_groups, build_transit_matrices, transit_dissimilarity, AdaTcParams,
    Clustering, ClusteringInput, DissimilarityMatrix, SlotTrip, TransitMatrix,
};

fn sizes_and_k1() -> impl Strategy<Value = (Vec<usize>, usize)> {
    prop::collection::vec(1usize..40, 1..15).prop_flat_map(|sizes| {
        let n: usize = sizes.iter().sum();
        let g = sizes.len();
        (Just(sizes), g..=n)
    })
}

fn transit(k1: usize) -> impl Strategy<Value = TransitMatrix> {
    prop::collection::vec(0.0f64..1.0, 10 * k1).prop_map(move |d| TransitMatrix::from_rows(k1, d).unwrap())
}

fn trips(n: usize) -> impl Strategy<Value = Vec<SlotTrip>> {
    let slot = prop::option::weighted(0.9, 0u8..5);
    prop::collection::vec((0..n, 0..n, slot.clone(), slot), 0..300).prop_map(|v| {
        v.into_iter()
            .map(|(origin, dest, depart_slot, arrive_slot)| SlotTrip { origin, dest, depart_slot, arrive_slot })
            .collect()
    })
}

proptest! {
    #[test]
    fn apportionment_is_exact_and_bounded((sizes, k1) in sizes_and_k1()) {
        let c = apportion_groups(&sizes, k1).unwrap();
        prop_assert_eq!(c.iter().sum::<usize>(), k1);
        for (ci, ni) in c.iter().zip(&sizes) {
            prop_assert!(*ci >= 1 && ci <= ni);
        }
    }

    #[test]
    fn transit_halves_are_distributions(t in trips(12), labels in prop::collection::vec(0usize..4, 12)) {
        // force every cluster to exist and give it a medoid
        let mut assignment = labels;
        assignment[..4].copy_from_slice(&[0, 1, 2, 3]);
        let clustering = Clustering::new(assignment, vec![0, 1, 2, 3]);
        for m in build_transit_matrices(12, &t, &clustering) {
            for slot in 0..5 {
                for half in m.row(slot).chunks(4) {
                    let s: f64 = half.iter().sum();
                    prop_assert!(s.abs() < 1e-9 || (s - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn frobenius_is_a_metric(a in transit(3), b in transit(3), c in transit(3)) {
        let d = |x: &TransitMatrix, y: &TransitMatrix| transit_dissimilarity(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        let direct: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!((d(&a, &b) - direct).abs() < 1e-12);
    }
}

fn toy_input(seed: u64) -> ClusteringInput {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = 40;
    let pos: Vec<(f64, f64)> = (0..n).map(|i| ((i % 4) as f64 * 3000.0 + rng.random_range(0.0..300.0), rng.random_range(0.0..300.0))).collect();
    let geo = DissimilarityMatrix::from_fn(n, |i, j| ((pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2)).sqrt());
    let profiles: Vec<[f64; 5]> = (0..n).map(|i| if i % 2 == 0 { [0.6, 0.2, 0.2, 0.5, 0.5] } else { [0.2, 0.2, 0.6, 0.7, 0.3] }).collect();
    let checkout = bikelink::clustering::checkout_matrix(&profiles);
    let trips = (0..2000)
        .map(|_| {
            let origin = rng.random_range(0..n);
            let dest = (origin % 4) + 4 * rng.random_range(0..10);
            let slot = Some(rng.random_range(0..5u8));
            SlotTrip { origin, dest, depart_slot: slot, arrive_slot: slot }
        })
        .collect();
    ClusteringInput::new(geo, checkout, trips).unwrap()
}

#[test]
fn adatc_is_deterministic_for_a_seed() {
    let input = toy_input(1);
    let params = AdaTcParams { k1: 8, k2: 4, seed: 42, ..AdaTcParams::default() };
    let a = adatc_plus(&input, &params).unwrap();
    let b = adatc_plus(&input, &params).unwrap();
    assert_eq!(a.gc, b.gc);
    assert_eq!(a.tc, b.tc);
    assert_eq!(a.reports, b.reports);
    assert_eq!(a.gc.k(), 8);
    assert_eq!(a.tc.k(), 4);
}

#[test]
fn adatc_output_is_a_valid_clustering() {
    for seed in 0..3 {
        let out = adatc_plus(&toy_input(seed), &AdaTcParams { k1: 10, k2: 3, seed, ..AdaTcParams::default() }).unwrap();
        out.gc.validate().unwrap();
        out.tc.validate().unwrap();
        assert!(out.gc.sizes().iter().all(|&s| s > 0));
        assert!(out.iterations >= 1 && out.iterations <= 10);
        assert_eq!(out.reports.len(), out.iterations);
    }
}
