// SPDX-License-Identifier: Apache-2.0

//! Seed derivation.
//!
//! Every random stream in the simulator descends from one root seed. A
//! subsystem seed is `splitmix64(root ^ splitmix64(stream))`, and nested
//! streams (per run, per iteration) fold further indices the same way.
//! Generators are ChaCha8 so trajectories are identical across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers for the subsystems that draw random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    HiddenInit = 1,
    Shuffle = 2,
    Variation = 3,
    Split = 4,
    Ripple = 5,
    Synthetic = 6,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(root: u64, stream: Stream) -> u64 {
    splitmix64(root ^ splitmix64(stream as u64))
}

/// Folds an index (run number, iteration, ...) into a seed.
pub fn fold(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn rng(root: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, stream))
}
