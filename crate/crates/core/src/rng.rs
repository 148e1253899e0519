//! Seeding conventions.
//!
//! Every random quantity in the crate is drawn from ChaCha8, a counter-based
//! stream cipher generator, so that a `(seed, stream)` pair identifies the
//! same sequence of 32-bit words on every platform. A 64-bit user seed is
//! expanded into the 256-bit ChaCha key with SplitMix64; independent
//! quantities derived from one seed use distinct ChaCha stream ids.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SketchRng = ChaCha8Rng;

/// Stream ids used for the parts of one sketch operator.
pub mod streams {
    pub const DENSE_ENTRIES: u64 = 0;
    pub const FJLT_SIGNS: u64 = 1;
    pub const FJLT_ROWS: u64 = 2;
    pub const SUBSAMPLE: u64 = 3;
    pub const PHASES: u64 = 4;
    pub const FREQUENCIES: u64 = 5;
    /// Row `t` of generated noise uses stream `NOISE_ROWS + t`.
    pub const NOISE_ROWS: u64 = 1 << 32;
}

/// One SplitMix64 step.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    mix64(*state)
}

/// The SplitMix64 output finalizer (a bijection on `u64`).
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha8 generator keyed by `seed`, positioned at the start of `stream`.
pub fn rng_for(seed: u64, stream: u64) -> SketchRng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Seed of block `block` in a multi-block run: `mix64(master ^ mix64(block + φ))`
/// where φ is the 64-bit golden-ratio increment.
pub fn block_seed(master: u64, block: u64) -> u64 {
    mix64(master ^ mix64(block.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}
