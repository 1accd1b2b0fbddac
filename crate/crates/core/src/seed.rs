//! Seed derivation for independent random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream keyed by
//! `(master_seed, tag, index)`, so adding draws in one place never perturbs
//! another and parallel work can be split without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub const TOPOLOGY: u64 = 0x746f_706f;
pub const PATHS: u64 = 0x7061_7468;
pub const NODE: u64 = 0x6e6f_6465;
pub const NETWORK: u64 = 0x6e65_7477;
pub const TXGEN: u64 = 0x7478_6765;
pub const BLOCKS: u64 = 0x626c_6f63;
pub const ADVERSARY: u64 = 0x6164_7672;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)
}

pub fn stream(master: u64, tag: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive(master, tag, index))
}
