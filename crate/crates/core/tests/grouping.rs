use gmea_core::grouping::{kmeans, merge, partition, partition_by_labels};
use gmea_core::synthetic::{random_model, two_blobs};
use proptest::prelude::*;

#[test]
fn merge_inverts_partition_on_random_model() {
    let model = random_model::<f64>(500, 8);
    for k in [1, 3, 7] {
        let a = kmeans(&model.positions(), k, 4).unwrap();
        let parts = partition(&model, &a).unwrap();
        assert_eq!(parts.iter().map(|p| p.model.len()).sum::<usize>(), 500);
        assert_eq!(merge(&parts).unwrap(), model);
    }
}

#[test]
fn well_separated_blobs_split_perfectly() {
    let model = two_blobs::<f64>(50, 10.0, 0.5, 2);
    let a = kmeans(&model.positions(), 2, 0).unwrap();
    let first = a.labels[0];
    assert!(a.labels[..50].iter().all(|&l| l == first));
    assert!(a.labels[50..].iter().all(|&l| l != first));
}

#[test]
fn wcss_never_increases() {
    let model = random_model::<f64>(300, 1);
    for seed in 0..5 {
        let a = kmeans(&model.positions(), 6, seed).unwrap();
        assert!(a.wcss_history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*a.wcss_history.last().unwrap(), a.wcss);
    }
}

#[test]
fn kmeans_argument_errors() {
    let model = random_model::<f64>(5, 1);
    assert!(kmeans(&model.positions(), 0, 0).is_err());
    assert!(kmeans(&model.positions(), 6, 0).is_err());
    assert!(partition_by_labels(&model, &[0, 0], 1).is_err());
}

proptest! {
    #[test]
    fn partition_merge_round_trip(n in 1usize..60, k in 1usize..6, seed in any::<u64>()) {
        let model = random_model::<f32>(n, seed);
        let k = k.min(n);
        let a = kmeans(&model.positions(), k, seed).unwrap();
        prop_assert_eq!(a.labels.len(), n);
        prop_assert!(a.labels.iter().all(|&l| l < k));
        prop_assert_eq!(merge(&partition(&model, &a).unwrap()).unwrap(), model);
    }
}
