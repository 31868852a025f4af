//! Seeded random substreams.
//!
//! Every random draw in the crate comes from a [`Substream`] derived from a
//! [`StreamKey`]. Keys form a tree: `key.child(i)` is a fresh, independent key
//! for task `i`. Work split into tasks therefore consumes the same random
//! numbers no matter how many threads execute it or in which order.

use rand::RngCore;
use rand_core::{impls, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A node in the substream derivation tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey(splitmix64(seed ^ 0x5eed_5eed_5eed_5eed))
    }

    pub fn child(&self, index: u64) -> Self {
        StreamKey(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x6a09_e667_f3bc_c909))))
    }

    /// The key as a seed, for handing a derived stream to an API that takes seeds.
    pub fn raw(&self) -> u64 {
        self.0
    }

    pub fn stream(&self) -> Substream {
        Substream(Xoshiro256PlusPlus::seed_from_u64(self.0))
    }
}

/// A random number stream owned by a single task.
#[derive(Clone, Debug)]
pub struct Substream(Xoshiro256PlusPlus);

impl Substream {
    /// Uniform integer in `[0, 2^bits)`.
    #[inline]
    pub fn bits(&mut self, bits: usize) -> u64 {
        if bits == 0 {
            0
        } else {
            self.0.next_u64() >> (64 - bits)
        }
    }

    /// Uniform float in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for Substream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        impls::fill_bytes_via_next(self, dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}
