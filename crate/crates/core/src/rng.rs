//! Seeded random streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A seeded ChaCha8 stream. Equal seeds give equal draw sequences on every platform.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream keyed by `(master, path...)`, e.g. `(seed, grid_index, repeat)`.
    ///
    /// The result depends only on the key, never on how many draws other
    /// streams have made, so batch jobs can run in any order.
    pub fn derive(master: u64, path: &[u64]) -> Self {
        let mut key = splitmix64(master);
        for &p in path {
            key = splitmix64(key ^ splitmix64(p.wrapping_add(0xA5A5_A5A5)));
        }
        Self::new(key)
    }

    /// Child stream keyed by this source's seed; does not advance `self`.
    pub fn child(&self, index: u64) -> Self {
        Self::derive(self.seed, &[index])
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
