//! Deterministic random-number substreams.
//!
//! Every Monte Carlo loop in this crate derives one independent RNG per
//! frame from a `(master seed, frame index)` pair, so results are
//! bit-identical for a given seed no matter how frames are chunked across
//! worker threads.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// SplitMix64 step, used as a seed mixer.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `seed` and `stream` into a full 256-bit ChaCha key.
fn derive_key(seed: u64, stream: u64) -> [u8; 32] {
    let mut state = seed ^ stream.rotate_left(32) ^ 0x1234_5678_9abc_def0;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// RNG for substream `stream` (e.g. a frame index) of a master seed.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_key(seed, stream))
}

/// Derives a child master seed, for nesting independent simulations
/// (e.g. one seed per SNR point, or per optimizer candidate).
pub fn child_seed(seed: u64, label: u64) -> u64 {
    let mut state = seed ^ label.wrapping_mul(0xd129_0d3e_a8f5_b2c7);
    splitmix64(&mut state)
}
