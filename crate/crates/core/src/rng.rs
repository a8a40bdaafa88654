//! Seed splitting for reproducible parallel simulation.
//!
//! Every tree gets its own ChaCha8 stream whose seed is a SplitMix64 hash of
//! `(master_seed, tree_index)`, so a forest is a pure function of its master
//! seed no matter how trees are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TreeRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of tree `index` under `master`.
pub fn split_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master.wrapping_add(GOLDEN_GAMMA)) ^ index.wrapping_mul(GOLDEN_GAMMA).wrapping_add(GOLDEN_GAMMA))
}

pub fn tree_rng(seed: u64) -> TreeRng {
    ChaCha8Rng::seed_from_u64(seed)
}
