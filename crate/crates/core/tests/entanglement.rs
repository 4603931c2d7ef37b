//! Invariants of the entanglement measures.

mod common;

use clusterstate::entanglement::{
    als_curve, colour_class_strategy, is_bell_pair, max_bipartite_rank, persistency_certify, schmidt_bounds, AlsOptions,
};
use clusterstate::statevec::{apply_locals, cluster_state_dense, ghz_state, w_state, LocalUnitary, PureState};
use proptest::prelude::*;

fn bell() -> PureState {
    ghz_state(2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bell_test_is_local_unitary_invariant(
        a in prop::array::uniform3(-1.0f64..1.0), ta in 0.0..6.3f64,
        b in prop::array::uniform3(-1.0f64..1.0), tb in 0.0..6.3f64,
    ) {
        prop_assume!(a.iter().map(|x| x * x).sum::<f64>() > 1e-3 && b.iter().map(|x| x * x).sum::<f64>() > 1e-3);
        let u = [LocalUnitary::rotation(0, a, ta), LocalUnitary::rotation(1, b, tb)];
        prop_assert!(is_bell_pair(&apply_locals(&bell(), &u).unwrap(), 1e-10).unwrap());
    }

    #[test]
    fn persistency_bounds_are_ordered(dim in 1usize..=2, n in 2usize..=8, seed in any::<u64>()) {
        let c = common::random_cluster(dim, n, seed);
        let s = cluster_state_dense(&c).unwrap();
        let cert = persistency_certify(&s, &colour_class_strategy(&c)).unwrap();
        prop_assert!(cert.lower <= cert.upper);
        prop_assert!(cert.upper < n);
    }

    #[test]
    fn schmidt_bounds_are_ordered(n in 2usize..=7, seed in any::<u64>()) {
        let c = common::random_cluster(2, n, seed);
        let s = cluster_state_dense(&c).unwrap();
        let o = AlsOptions { restarts: 2, max_iters: 100, ..AlsOptions::default() };
        let b = schmidt_bounds(&s, &o).unwrap();
        prop_assert!(0.0 <= b.lower && b.lower <= b.upper + 1e-12);
        let ranks = max_bipartite_rank(&s, seed).unwrap();
        prop_assert!((b.lower - (ranks.max_rank as f64).log2()).abs() < 1e-12);
    }
}

#[test]
fn als_residual_does_not_increase_with_terms() {
    let o = AlsOptions { restarts: 8, max_iters: 500, ..AlsOptions::default() };
    for s in [w_state(4).unwrap(), cluster_state_dense(&clusterstate::lattice::Cluster::chain(4).unwrap()).unwrap()] {
        let curve = als_curve(&s, 4, &o).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].residual <= w[0].residual + 1e-9, "{} then {}", w[0].residual, w[1].residual);
        }
    }
}
