//! Seed derivation.
//!
//! Every stochastic stage draws from its own ChaCha8 stream whose seed is
//! `splitmix64(run_seed ^ fnv1a64(stage_tag))`. The scheme is fixed: changing
//! it changes every persisted artifact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn sub_seed(run_seed: u64, stage: &str) -> u64 {
    splitmix64(run_seed ^ fnv1a64(stage.as_bytes()))
}

pub fn stage_rng(run_seed: u64, stage: &str) -> StageRng {
    StageRng::seed_from_u64(sub_seed(run_seed, stage))
}

pub fn rng_from_seed(seed: u64) -> StageRng {
    StageRng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_values() {
        // frozen: persisted artifacts depend on these
        assert_eq!(fnv1a64(b""), FNV_OFFSET);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_ne!(sub_seed(0, "split"), sub_seed(0, "percolate"));
        assert_ne!(sub_seed(0, "split"), sub_seed(1, "split"));
        assert_eq!(sub_seed(7, "train"), sub_seed(7, "train"));
    }
}
