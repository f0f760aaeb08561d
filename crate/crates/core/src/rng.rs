//! Seeding for independent, reproducible run streams.
//!
//! Every run owns a ChaCha8 generator whose 64-bit seed is derived from
//! `(master_seed, run_index)` with the SplitMix64 finalizer:
//!
//! ```text
//! z = master_seed + 0x9E3779B97F4A7C15 * (run_index + 1)      (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! seed = z ^ (z >> 31)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix_seed(master_seed: u64, run_index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(run_index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_rng(master_seed: u64, run_index: u64) -> SimRng {
    SimRng::seed_from_u64(mix_seed(master_seed, run_index))
}
