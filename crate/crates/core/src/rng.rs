//! Reproducible random streams.
//!
//! A master seed is turned into named experiment streams; every replicate of
//! an experiment draws from its own ChaCha8 stream selected by the replicate
//! index (counter-based splitting). The numbers a replicate sees therefore
//! do not depend on which worker runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ReplicateRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSeeder {
    key: u64,
}

impl StreamSeeder {
    pub fn new(master_seed: u64) -> Self {
        Self { key: mix64(master_seed) }
    }

    /// Independent seeder for a named sub-experiment.
    pub fn child(&self, label: &str) -> Self {
        Self { key: mix64(self.key ^ mix64(fnv1a(label))) }
    }

    /// Independent seeder for an indexed sub-experiment (e.g. one grid point).
    pub fn child_index(&self, index: u64) -> Self {
        Self { key: mix64(self.key.rotate_left(17) ^ mix64(index ^ 0xA5A5_5A5A_0F0F_F0F0)) }
    }

    pub fn replicate(&self, index: u64) -> ReplicateRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }

    pub fn key(&self) -> u64 {
        self.key
    }
}
