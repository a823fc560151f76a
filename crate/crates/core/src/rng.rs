//! Deterministic random sub-streams.
//!
//! Every consumer of randomness (one fBm mode of one sample, the jump
//! stream of one sample, the permeability field) gets its own ChaCha
//! stream keyed by the master seed and a path of indices, so results do not
//! depend on scheduling or on how many other streams exist.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Domain tags separating families of streams derived from one seed.
pub mod tag {
    pub const FBM_MODE: u64 = 0x6662_6d00;
    pub const JUMPS: u64 = 0x6a75_6d70;
    pub const PERMEABILITY: u64 = 0x7065_726d;
    pub const PROBE: u64 = 0x7072_6f62;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for `seed` refined by each element of `path` in turn.
pub fn derive(seed: u64, path: &[u64]) -> Stream {
    let mut key = splitmix64(seed);
    for &p in path {
        key = splitmix64(key ^ splitmix64(p.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    ChaCha8Rng::seed_from_u64(key)
}
