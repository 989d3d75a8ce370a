//! Seeded pseudo-random numbers.
//!
//! Every random decision in the crate (corpus shuffles, embedding
//! initialization, window and negative sampling, classifier initialization)
//! draws from [`SplitMix64`], so results are reproducible from a single
//! 64-bit seed in any language that implements the same few lines:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! return z ^ (z >> 31)                      (all arithmetic wrapping mod 2^64)
//! ```
//!
//! Derived quantities:
//! * `next_f64` = `(next_u64 >> 11) * 2^-53`, uniform in `[0, 1)`.
//! * `below(n)` = `next_u64 % n` (modulo bias is accepted; it is < 2^-40 for
//!   the sizes used here).
//! * `shuffle` is Fisher-Yates from the back: for `i = n-1 ..= 1`,
//!   swap `i` with `below(i + 1)`.
//! * `derive_seed(seed, tag)` = first output of a generator seeded with
//!   `seed ^ fnv1a64(tag)`. Sub-seeds used by the pipeline are
//!   `"embed"`, `"split"`, `"shuffle"` and `"init"`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        (self.next_u64() % n as u64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Independent sub-seed for one consumer of randomness.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    SplitMix64::new(seed ^ fnv1a64(tag.as_bytes())).next_u64()
}
