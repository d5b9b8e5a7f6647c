//! Derivation of independent sub-seeds from one run seed.

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A seed for stream `tag`, index `i` of a run seeded with `seed`.
pub fn derive(seed: u64, tag: &str, i: u64) -> u64 {
    let mut h = mix(seed);
    for b in tag.bytes() {
        h = mix(h ^ b as u64);
    }
    mix(h ^ i)
}
