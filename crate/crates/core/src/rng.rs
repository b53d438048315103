//! Reproducible random-number streams.
//!
//! Every stochastic operation derives its generator from a `(master seed,
//! domain, index)` triple, so shots and scan points are statistically
//! independent yet bitwise reproducible, and parallel evaluation yields the
//! same aggregate counts as sequential evaluation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step, used to decorrelate the seed and the domain tag.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for `(master, domain, index)`. Distinct triples give
/// independent ChaCha8 streams.
pub fn derive(master: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master ^ splitmix64(domain));
    rng.set_stream(index);
    rng
}

/// A fresh `u64` seed derived from `(master, domain, index)`, for handing a
/// whole subsystem its own seed space.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    use rand::Rng;
    derive(master, domain, index).random()
}

/// Domain tags used by the crate. Tags are spaced so small offsets (e.g.
/// readout target level, scan point index) never collide across domains;
/// external callers may use any values ≥ 0x10000.
pub mod domain {
    pub const READOUT: u64 = 0x100;
    pub const SCAN_POINT: u64 = 0x200;
    pub const BOOTSTRAP: u64 = 0x300;
    pub const TRIAL: u64 = 0x400;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let a: f64 = derive(7, 1, 0).random();
        let b: f64 = derive(7, 1, 0).random();
        assert_eq!(a, b);
        let c: f64 = derive(7, 1, 1).random();
        let d: f64 = derive(7, 2, 0).random();
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
