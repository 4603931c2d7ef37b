use clusterstate::lattice::{Cluster, Site};
use clusterstate::rng_from_seed;
use rand::Rng;

/// Connected cluster grown from the origin by seeded nearest-neighbour steps.
pub fn random_cluster(dim: usize, n: usize, seed: u64) -> Cluster {
    let mut rng = rng_from_seed(seed);
    let mut sites = vec![Site::new(vec![0; dim])];
    while sites.len() < n {
        let from = sites[rng.random_range(0..sites.len())].clone();
        let next = from.step(rng.random_range(0..dim), if rng.random::<bool>() { 1 } else { -1 });
        if !sites.contains(&next) {
            sites.push(next);
        }
    }
    Cluster::new(dim, sites).unwrap()
}
