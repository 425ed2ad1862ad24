//! Keyed random streams.
//!
//! Every random quantity in an experiment is drawn from its own ChaCha8 stream whose
//! 256-bit seed is a hash of the master seed and a short path of integers (role,
//! replicate, hypothesis, ...). Streams never depend on which worker consumes them, so
//! results are identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream roles, the first component of every key path.
pub mod role {
    pub const NOISE: u64 = 1;
    pub const SPIKE: u64 = 2;
    pub const MC_SPIKES: u64 = 3;
    pub const VERIFY: u64 = 4;
    pub const CLI: u64 = 5;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifies one independent random stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamKey {
    master: u64,
    path: Vec<u64>,
}

impl StreamKey {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            path: Vec::new(),
        }
    }

    /// Extends the path by one component.
    pub fn with(&self, component: u64) -> Self {
        let mut path = self.path.clone();
        path.push(component);
        Self {
            master: self.master,
            path,
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    pub fn seed(&self) -> [u8; 32] {
        let mut state = self.master;
        let mut acc = splitmix64(&mut state);
        for (depth, &c) in self.path.iter().enumerate() {
            // position-dependent mixing so that (a, b) and (b, a) differ
            state ^= c.wrapping_add((depth as u64 + 1).wrapping_mul(0xd6e8_feb8_6659_fd93));
            acc ^= splitmix64(&mut state);
        }
        state ^= acc;
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        seed
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.seed())
    }
}
