//! Counter-based random number substreams.
//!
//! Every random quantity in the library is drawn from a ChaCha8 stream whose
//! 256-bit key encodes `(seed, domain, coordinate)` injectively. Replications
//! and coordinates therefore own disjoint streams by construction, and results
//! do not depend on scheduling or worker count.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domain separation tags, one per kind of random draw.
pub mod domain {
    pub const SIGNAL: u64 = 0x01;
    pub const OBSERVE: u64 = 0x02;
    pub const PRIOR_SAMPLE: u64 = 0x03;
    pub const POSTERIOR_SAMPLE: u64 = 0x04;
    pub const DERIVE: u64 = 0x05;
}

/// ChaCha8 stream for one `(seed, domain, coordinate)` triple.
pub fn coord_rng(seed: u64, dom: u64, coord: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&dom.to_le_bytes());
    key[16..24].copy_from_slice(&coord.to_le_bytes());
    key[24..32].copy_from_slice(&0x42564d4c41425f31u64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Derive a child seed for `(cell, replication, purpose)` under a master seed.
///
/// The child is the first word of a ChaCha8 stream keyed by the full path, so
/// distinct paths get (except for a ~2^-64 birthday chance) distinct seeds
/// while the child itself stays a plain `u64` that library entry points accept.
pub fn derive_seed(master: u64, cell: u64, replication: u64, purpose: u64) -> u64 {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&cell.to_le_bytes());
    key[16..24].copy_from_slice(&replication.to_le_bytes());
    key[24..32].copy_from_slice(&purpose.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.next_u64() ^ domain::DERIVE.rotate_left(32)
}
