//! Deterministic randomness plumbing.
//!
//! All stochastic output descends from a single `u64` master seed through a
//! two-level splitting scheme:
//!
//! 1. ensemble run `r` gets `run_seed(master, r)`, the SplitMix64 mix of
//!    `master + (r + 1) * GOLDEN` (i.e. the r-th output of the SplitMix64
//!    stream seeded with `master`);
//! 2. within a run, independent ChaCha8 *streams* of the run seed are
//!    assigned as: stream 0 drives the switching chain, stream `1 + i`
//!    drives node i's Brownian increments.
//!
//! Per-node streams make the Brownian drivers independent and keep a
//! trajectory bit-reproducible from its seed alone no matter how grid steps
//! are split at jump times.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for ensemble run `r` under `master`: the r-th SplitMix64 output.
#[must_use]
pub fn run_seed(master: u64, run: u64) -> u64 {
    mix(master.wrapping_add(run.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// RNG stream driving the switching chain of the run with seed `seed`.
#[must_use]
pub fn chain_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// RNG stream driving node `i`'s Brownian increments for the run with seed
/// `seed`.
#[must_use]
pub fn node_rng(seed: u64, node: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + node as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn run_seeds_match_splitmix_reference_vectors() {
        // First three outputs of the SplitMix64 reference stream seeded
        // with 0 (published test vectors).
        assert_eq!(run_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(run_seed(0, 1), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(run_seed(0, 2), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn run_seeds_have_no_short_range_collisions() {
        let mut seen = std::collections::HashSet::new();
        for master in 0..8u64 {
            for run in 0..256u64 {
                assert!(seen.insert(run_seed(master, run)));
            }
        }
    }

    #[test]
    fn streams_are_distinct_and_deterministic() {
        let mut chain = chain_rng(42);
        let mut chain2 = chain_rng(42);
        assert_eq!(chain.next_u64(), chain2.next_u64());
        let mut n0 = node_rng(42, 0);
        let mut n1 = node_rng(42, 1);
        let (a, b) = (n0.next_u64(), n1.next_u64());
        assert_ne!(a, b);
        let mut n0_again = node_rng(42, 0);
        assert_eq!(a, n0_again.next_u64());
    }
}
