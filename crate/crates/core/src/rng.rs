//! Counter-derived random streams.
//!
//! A [`SeededStream`] names a family of independent generators: replicate `r`
//! of stream `(seed, label)` always sees the same ChaCha8 keystream, no matter
//! which worker thread evaluates it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used when none is given on the command line or in a config.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    seed: u64,
    label: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, label: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent child stream; labels are hashed, not added,
    /// so `fork(a).fork(b)` and `fork(b).fork(a)` differ.
    pub fn fork(&self, label: u64) -> Self {
        let mut s = self.label ^ label.rotate_left(17) ^ 0xD1B5_4A32_D192_ED03;
        let mixed = splitmix64(&mut s);
        Self {
            seed: self.seed,
            label: mixed,
        }
    }

    /// Fork keyed by a string, e.g. an experiment or instance name.
    pub fn fork_named(&self, name: &str) -> Self {
        // FNV-1a: stable across platforms and releases.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in name.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        self.fork(h)
    }

    /// Generator for replicate `index`.
    pub fn replicate(&self, index: u64) -> ChaCha8Rng {
        let mut state = self.seed ^ self.label.rotate_left(29);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}
