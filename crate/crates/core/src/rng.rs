//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator
//! keyed by a single `u64` seed (`ChaCha8Rng::seed_from_u64`). Monte Carlo
//! replications derive their seed from
//! `(master_seed, cell_index, replication_index)` with [`derive_seed`], so a
//! replication's stream does not depend on which worker runs it or in what
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `replication` of grid cell `cell`: three chained
/// SplitMix64 rounds over the master seed and the two indices.
pub fn derive_seed(master_seed: u64, cell: u64, replication: u64) -> u64 {
    let h = splitmix64(master_seed);
    let h = splitmix64(h ^ cell);
    splitmix64(h ^ replication.rotate_left(32))
}
