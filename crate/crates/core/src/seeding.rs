//! Stable seed derivation.
//!
//! All randomness flows from a master seed through [`derive_seed`], a chain
//! of SplitMix64 finalizers over the path components. The scheme is part of
//! the output format: changing it changes every result file.
//!
//! Paths used by the harness:
//!
//! | stream          | path                              |
//! |-----------------|-----------------------------------|
//! | trial           | `[master, TRIAL, trial]`          |
//! | world           | `[trial, WORLD]`                  |
//! | trial responses | `[trial, RESPONSES]`              |
//! | filter          | `[trial, FILTER]`                 |
//! | node `i`        | `[responses, NODE, i]`            |
//! | adversary       | `[responses, ADVERSARY]`          |
//! | corrupted node  | `[responses, CORRUPT, i]`         |
//! | grid point `j`  | `[filter, GRID, j as i64 as u64]` |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TRIAL: u64 = 0x5452_4941_4c;
pub const WORLD: u64 = 0x574f_524c_44;
pub const RESPONSES: u64 = 0x5245_5350;
pub const NODE: u64 = 0x4e4f_4445;
pub const ADVERSARY: u64 = 0x4144_5645;
pub const CORRUPT: u64 = 0x434f_5252;
pub const FILTER: u64 = 0x4649_4c54;
pub const GRID: u64 = 0x4752_4944;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a path of integers into one 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(parts.len() as u64), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
