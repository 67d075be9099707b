//! Deterministic pseudo-random numbers.
//!
//! A small SplitMix64 generator is used everywhere instead of an external
//! RNG crate so that sampled scenarios, weight initialization and shuffles
//! are bit-reproducible across platforms and toolchain versions.

/// SplitMix64 generator (Steele, Lea, Flood 2014). Passes BigCrush for the
/// state sizes used here and is trivially seedable from a hash.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derive an independent stream for a (base seed, index) pair.
    ///
    /// Used for per-scenario seeds so that parallel generation order
    /// cannot change results.
    pub fn derive(base_seed: u64, index: u64) -> Self {
        let mut mix = SplitMix64::new(base_seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index + 1));
        // burn two outputs so nearby indices decorrelate
        mix.next_u64();
        mix.next_u64();
        SplitMix64::new(mix.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: u64) -> u64 {
        // modulo bias is < 2^-53 for the n used here (counts, indices)
        self.next_u64() % n.max(1)
    }

    /// Standard normal via Box-Muller (no cached spare; cheap enough).
    pub fn normal(&mut self) -> f64 {
        let u1 = (1.0 - self.next_f64()).max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
