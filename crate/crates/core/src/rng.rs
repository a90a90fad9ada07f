//! Counter-based randomness.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed and
//! a small tuple of counters, so results never depend on evaluation order or
//! thread count.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a seed together with a sequence of counters.
#[inline]
pub fn derive(seed: u64, counters: &[u64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for &c in counters {
        h = mix64(h ^ mix64(c.wrapping_add(GOLDEN).wrapping_mul(GOLDEN)));
    }
    h
}

/// Sign of `block` in flip number `flip` (both zero-based).
///
/// Signs are packed 64 per hash: bit `block % 64` of
/// `derive(seed, [flip, block / 64])`.
#[inline]
pub fn block_sign(seed: u64, flip: u64, block: u64) -> f64 {
    let word = derive(seed, &[flip, block / 64]);
    if (word >> (block % 64)) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}
