//! Keyed random streams.
//!
//! Every random draw of a trial comes from a ChaCha8 stream addressed by
//! `(seed, trial, slot, role)`: the seed keys the cipher, the trial selects
//! the stream and `(slot, role)` selects a 2³² word block inside it. The
//! draws of a trial therefore never depend on which worker ran it or in
//! what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Role {
    /// Initial LO phases.
    Init = 0,
    /// LO frequency errors.
    Freq = 1,
    /// Receiver noise of a slot.
    Noise = 2,
}

const ROLES: u128 = 3;

/// SplitMix64 output function, used to expand the 64-bit seed into a key.
fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, trial: u64, slot: usize, role: Role) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng.set_word_pos((slot as u128 * ROLES + role as u128) << 32);
    rng
}
