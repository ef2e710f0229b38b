//! SplitMix64 generator.
//!
//! The algorithm is the public-domain SplitMix64 finalizer (Steele, Lea,
//! Flood 2014): state advances by the golden-gamma constant and the output
//! is a bijective xor-multiply mix of the state. Sequences are therefore
//! reproducible from a single `u64` seed in any implementation of the same
//! algorithm, which is what the reproducibility contracts here rely on.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Independent child stream: the (seed, index) pair is mixed through the
    /// generator itself so streams can be split by counter (one per sample,
    /// per probe, ...) without correlation.
    pub fn stream(seed: u64, index: u64) -> Self {
        let mut r = SplitMix64::new(seed ^ index.wrapping_mul(GAMMA).rotate_left(32));
        r.next_u64(); // decorrelate from the raw xor
        r
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal by Box-Muller. Draws exactly two uniforms per call
    /// so the stream position is input-independent.
    pub fn normal(&mut self) -> f64 {
        let mut u1 = self.next_f64();
        let u2 = self.next_f64();
        if u1 <= f64::MIN_POSITIVE {
            u1 = f64::MIN_POSITIVE;
        }
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
