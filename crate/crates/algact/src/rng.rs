//! Deterministic counter-based random streams.
//!
//! Every randomized computation in this crate draws from a [`Stream`]
//! derived from a user seed and a task path. The generator is a
//! splitmix-style counter mixer: the n-th output is a pure function of
//! (key, n), so results are independent of thread scheduling. Parallel
//! code derives one substream per task index and never shares streams.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic random stream identified by a 64-bit key.
#[derive(Clone, Debug)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn from_seed(seed: u64) -> Self {
        Stream { key: mix(seed ^ GAMMA), counter: 0 }
    }

    /// Derive an independent substream for task `id`. Deterministic in
    /// (key, id) and unaffected by how much the parent has been used.
    pub fn substream(&self, id: u64) -> Self {
        Stream {
            key: mix(self.key.wrapping_add(GAMMA).wrapping_add(mix(id ^ 0xA5A5_A5A5_A5A5_A5A5))),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform integer in [lo, hi] inclusive.
    pub fn next_int(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo + 1) as u64;
        lo + (self.next_u64() % span) as i64
    }

    /// Standard normal via Box-Muller. One value per call; the paired
    /// value is discarded to keep the draw count predictable.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
