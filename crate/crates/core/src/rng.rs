//! Counter-based random streams.
//!
//! Every random procedure in this crate draws from a ChaCha stream keyed by
//! `(seed, stream id)`. ChaCha generates blocks from a (key, stream, counter)
//! triple, so a stream's output depends only on the key material, never on
//! how many values other streams have consumed. Parallel workers that own
//! distinct stream ids therefore produce bit-identical results regardless of
//! scheduling or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream ids, one per independent source of randomness. Composite consumers
/// (per repetition, per particle) combine these with an index via [`derive`].
pub mod tag {
    pub const DIRECTIONS: u64 = 1;
    pub const VMF: u64 = 2;
    pub const COEFFICIENTS: u64 = 3;
    pub const PARTICLE_INIT: u64 = 4;
    pub const FLOW_NOISE: u64 = 5;
    pub const SUBSAMPLE: u64 = 6;
    pub const CAUCHY: u64 = 7;
    pub const TREATMENT: u64 = 8;
}

/// SplitMix64 finalizer; full-period bijection on u64.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and an index (repetition number,
/// particle index, ...). Children with distinct indices get distinct,
/// well-mixed keys.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix(seed ^ splitmix(index.wrapping_add(0x517c_c1b7_2722_0a95)))
}

/// The generator for `(seed, stream_id)`. The seed fixes the ChaCha key, the
/// stream id selects an independent stream under that key.
pub fn stream(seed: u64, stream_id: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    let mut s = splitmix(seed);
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&s.to_le_bytes());
        s = splitmix(s);
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}
