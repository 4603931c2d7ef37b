//! Lattice specs and their decomposition into clusters.

use clusterstate::lattice::{decompose, LatticeSpec};
use proptest::prelude::*;

#[test]
fn block_spec_with_origin() {
    let spec = LatticeSpec::from_json(r#"{"dim": 2, "block": [3, 2], "origin": [-1, 4]}"#).unwrap();
    let parts = decompose(&spec.occupation().unwrap());
    assert_eq!(parts.len(), 1);
    assert_eq!(parts[0].len(), 6);
    assert_eq!(parts[0].edges().len(), 7);
}

#[test]
fn mismatched_block_is_rejected() {
    let spec = LatticeSpec::from_json(r#"{"dim": 3, "block": [3, 2]}"#).unwrap();
    assert!(spec.occupation().is_err());
    assert!(LatticeSpec::from_json(r#"{"dim": 2, "sites": [[0, 0], [1]]}"#)
        .and_then(|s| s.occupation())
        .is_err());
}

proptest! {
    #[test]
    fn decomposition_partitions_the_sites(points in prop::collection::btree_set((0i64..6, 0i64..6), 1..20)) {
        let sites: Vec<Vec<i64>> = points.iter().map(|&(x, y)| vec![x, y]).collect();
        let spec = LatticeSpec::Sites { dim: 2, sites: sites.clone() };
        let parts = decompose(&spec.occupation().unwrap());
        prop_assert_eq!(parts.iter().map(|c| c.len()).sum::<usize>(), sites.len());
        // no edge joins two different clusters
        for (i, a) in parts.iter().enumerate() {
            for b in &parts[i + 1..] {
                for s in a.sites() {
                    prop_assert!(b.sites().iter().all(|t| !s.is_neighbor(t)));
                }
            }
        }
        // a spec round trip gives the same clusters
        let again = decompose(&LatticeSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap().occupation().unwrap());
        prop_assert_eq!(parts, again);
    }
}
