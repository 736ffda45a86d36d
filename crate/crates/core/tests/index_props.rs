mod common;

use assouad_lab::geometry::{MultiScaleIndex, PointSet};
use proptest::prelude::*;

#[test]
fn random_sets_agree_with_brute_force() {
    let mut bad = Vec::new();
    for seed in 0..60u64 {
        let dim = 1 + (seed % 3) as usize;
        bad.extend(common::index_violations(10_000 + seed, dim, 3000));
    }
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn duplicate_and_single_points() {
    let one = PointSet::new(2, vec![vec![1.0, 2.0]; 5], 1e-3).unwrap();
    let idx = MultiScaleIndex::build_auto(&one).unwrap();
    for l in 0..=idx.max_level() {
        assert_eq!(idx.occupied_count(l).unwrap(), 1);
    }
    assert_eq!(idx.ball_count(&[1.0, 2.0], 1e-3, idx.max_level()).unwrap(), 1);
    assert_eq!(idx.ball_count(&[5.0, 5.0], 1.0, idx.max_level()).unwrap(), 0);
}

fn points(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, dim), 1..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ball_counts_grow_with_radius(pts in points(2), r1 in 1e-3..5.0f64, f in 1.0..4.0f64) {
        let set = PointSet::new(2, pts, 1e-3).unwrap();
        let idx = MultiScaleIndex::build_auto(&set).unwrap();
        let x = set.point(0).to_vec();
        let level = idx.max_level() / 2;
        let small = idx.ball_count(&x, r1, level).unwrap();
        let big = idx.ball_count(&x, r1 * f, level).unwrap();
        prop_assert!(small >= 1);
        prop_assert!(small <= big);
        prop_assert!(big <= idx.occupied_count(level).unwrap());
    }

    #[test]
    fn union_occupancy_is_subadditive(a in points(3), b in points(3)) {
        let sa = PointSet::new(3, a, 1e-2).unwrap();
        let sb = PointSet::new(3, b, 1e-2).unwrap();
        let su = sa.union(&sb).unwrap();
        let iu = MultiScaleIndex::build_auto(&su).unwrap();
        prop_assert!(iu.verify_structure().is_ok());
        let leaves = iu.occupied_count(iu.max_level()).unwrap();
        prop_assert!(leaves <= su.len());
        prop_assert!(iu.num_points() == sa.len() + sb.len());
    }
}
