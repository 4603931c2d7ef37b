//! End-to-end protocol runs through the public API.

mod common;

use clusterstate::lattice::{Cluster, Site};
use clusterstate::protocols::{
    bell_project_sites, carve_path, cross_check, disentangle_even, extract_ghz_block, prepare_alpha_beta, run_script,
    BranchMode, ProtocolScript, Target,
};
use clusterstate::lattice::Path;
use clusterstate::statevec::cluster_state_dense;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn l_shape() -> Cluster {
    Cluster::new(2, [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)].map(Site::from)).unwrap()
}

#[test]
fn bell_pair_at_the_ends_of_an_l_shape() {
    let c = l_shape();
    let s = cluster_state_dense(&c).unwrap();
    let r = bell_project_sites(&c, &s, &Site::from((0, 0)), &Site::from((2, 2))).unwrap();
    assert!(r.all_passed);
    assert!((r.total_probability() - 1.0).abs() < 1e-12);
    let x = cross_check(&c, &r).unwrap();
    assert_eq!(x.mismatches, 0);
}

#[test]
fn carve_a_bent_path_in_three_dimensions() {
    let c = Cluster::block(&[2, 2, 2]).unwrap();
    let path = Path::new([(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 1)].map(Site::from).to_vec());
    let r = carve_path(&c, &path).unwrap();
    assert!(r.all_passed);
    assert_eq!(r.remaining.len(), 4);
    assert_eq!(cross_check(&c, &r).unwrap().mismatches, 0);
}

#[test]
fn ghz_in_three_dimensions_on_both_backends() {
    let c = Cluster::block(&[3, 3, 3]).unwrap();
    let targets: Vec<Site> = c.sites().iter().filter(|s| s.all_even()).cloned().collect();
    let r = extract_ghz_block(&c, &targets, BranchMode::Tableau { samples: 6, seed: 11 }).unwrap();
    assert!(r.all_passed);
    assert_eq!(r.remaining.len(), targets.len());
}

#[test]
fn script_survives_a_json_round_trip() {
    let c = Cluster::chain(7).unwrap();
    let script = disentangle_even(&c);
    let again = ProtocolScript::from_json(&script.to_json().unwrap()).unwrap();
    assert_eq!(again.steps.len(), script.steps.len());
    let s = cluster_state_dense(&c).unwrap();
    let a = run_script(&c, &s, &script, Target::Product).unwrap();
    let b = run_script(&c, &s, &again, Target::Product).unwrap();
    assert!(a.all_passed && b.all_passed);
    assert_eq!(a.branches.len(), b.branches.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bell_projection_succeeds_between_any_two_sites(seed in any::<u64>(), n in 2usize..=8, i in 0usize..8, j in 0usize..8) {
        let c = common::random_cluster(2, n, seed);
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j);
        let s = cluster_state_dense(&c).unwrap();
        let r = bell_project_sites(&c, &s, c.site(i), c.site(j)).unwrap();
        prop_assert!(r.all_passed);
        prop_assert!((r.total_probability() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn alpha_beta_hits_any_normalized_pair(theta in 0.0..std::f64::consts::PI, phase in 0.0..std::f64::consts::TAU) {
        let c = Cluster::block(&[3, 3]).unwrap();
        let targets: Vec<Site> = c.sites().iter().filter(|s| s.all_even()).cloned().collect();
        let alpha = C64::new((theta / 2.0).cos(), 0.0);
        let beta = C64::from_polar((theta / 2.0).sin(), phase);
        let r = prepare_alpha_beta(&c, &targets, alpha, beta).unwrap();
        prop_assert!(r.all_passed, "worst fidelity {}", r.worst_fidelity());
    }
}
