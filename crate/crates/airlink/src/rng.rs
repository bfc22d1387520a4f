//! Deterministic, splittable random number generation.
//!
//! All randomness in this crate flows through [`Rng`], a counter-based
//! generator built on the SplitMix64 output function. The state is a plain
//! 64-bit counter advanced by a fixed odd increment, so a generator is fully
//! described by its seed and the number of values drawn. Independent streams
//! are derived with [`Rng::split`], which hashes a tag into a fresh seed
//! without advancing the parent. Gaussian samples use the Box-Muller
//! transform (two uniforms per sample, no cached twin), so sequences are
//! reproducible across platforms up to floating-point rounding.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Finalizer from SplitMix64: maps a counter value to a well-mixed output.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based pseudo-random generator with deterministic splitting.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Derives an independent stream from this generator's current state and
    /// a caller-chosen tag. Does not advance `self`, so `split(a)` and
    /// `split(b)` are reproducible in any order.
    pub fn split(&self, tag: u64) -> Rng {
        Rng {
            state: mix64(self.state ^ mix64(tag.wrapping_mul(GOLDEN_GAMMA) ^ GOLDEN_GAMMA)),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Modulo bias is negligible for n << 2^64.
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal sample via Box-Muller. Consumes exactly two uniforms.
    pub fn next_gaussian(&mut self) -> f64 {
        // u1 in (0, 1] so the log is finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn gaussian(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.next_gaussian()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.below(i + 1);
            slice.swap(i, j);
        }
    }
}
