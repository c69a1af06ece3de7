//! Counter-based random streams.
//!
//! A stream is identified by `(seed, stream id)` and its draws are a pure
//! function of `(seed, stream id, counter)`. Monte Carlo loops key one
//! stream per logical task index, so results do not depend on the number of
//! worker threads or on scheduling order.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; the output stage of the counter sequence below.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A cheap, reproducible, counter-based generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    key: u64,
    counter: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        // decorrelate the stream id from the seed before keying
        let key = mix(mix(seed ^ GOLDEN).wrapping_add(stream.wrapping_mul(GOLDEN)));
        RandomStream { key, counter: 0 }
    }

    /// Derives an independent child stream. Children with distinct ids are
    /// decorrelated from each other and from the parent's own draws.
    pub fn substream(&self, id: u64) -> RandomStream {
        RandomStream {
            key: mix(self.key ^ id.wrapping_mul(GOLDEN) ^ 0x5851_f42d_4c95_7f2d),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` (multiply-shift; bias is O(n / 2^64)).
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Centered Gaussian draw with standard deviation `sd`.
    ///
    /// Box-Muller, cosine branch only: every call consumes exactly two
    /// uniforms, so the stream position stays a simple function of the
    /// number of calls.
    pub fn normal(&mut self, sd: f64) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
