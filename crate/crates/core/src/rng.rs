//! Counter-based deterministic RNG (splitmix64).
//!
//! Generators that need randomness use this fixed, documented construction so
//! outputs are bit-reproducible across platforms and thread counts. Constants
//! are the standard splitmix64 ones: golden-gamma increment 0x9E3779B97F4A7C15
//! and finalizer multipliers 0xBF58476D1CE4E5B9, 0x94D049BB133111EB.

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

pub const GOLDEN_GAMMA: u64 = 0x9E3779B97F4A7C15;
const MIX_A: u64 = 0xBF58476D1CE4E5B9;
const MIX_B: u64 = 0x94D049BB133111EB;

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX_A);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_B);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in 0..n (n > 0).
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // Multiply-shift; bias is < 2^-64 * n, irrelevant at our sample sizes.
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    pub fn next_i64_in(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        lo + self.next_below((hi - lo + 1) as u64) as i64
    }
}
