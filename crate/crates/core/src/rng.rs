//! Per-draw random streams. Every draw gets its own generator seeded from
//! the run seed and the draw's indices, so results do not depend on the
//! order or the number of threads that evaluate them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Default run seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5EED;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for the draw identified by `path` (e.g. `[n, replicate]`).
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let h = path.iter().fold(0x243F_6A88_85A3_08D3u64, |acc, &i| splitmix64(acc ^ splitmix64(i)));
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, &[1, 2]).random();
        let b: u64 = stream(7, &[1, 2]).random();
        let c: u64 = stream(7, &[2, 1]).random();
        let d: u64 = stream(8, &[1, 2]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
