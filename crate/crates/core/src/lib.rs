//! Simulation and analysis of lattice cluster states.
//!
//! * [`lattice`] — occupied sites, clusters, paths.
//! * [`statevec`] — exact dense amplitudes: preparation, evolution,
//!   measurement and reduced states.
//! * [`stabilizer`] — sparse stabilizer tableaux for large registers.
//! * [`entanglement`] — product/Bell tests, Schmidt-measure bounds,
//!   persistency and connectedness certificates.
//! * [`protocols`] — measurement procedures with per-branch corrections.

pub mod entanglement;
pub mod error;
pub mod lattice;
pub mod mat2;
pub mod pauli;
pub mod protocols;
pub mod stabilizer;
pub mod statevec;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every seeded random choice in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}
