//! Counter-based pseudo-random numbers.
//!
//! A stream is a 64-bit key plus a counter. The i-th output (i = 1, 2, ...)
//! is `mix(key + i * 0x9E3779B97F4A7C15)` with wrapping arithmetic, where
//! `mix` is the SplitMix64 finalizer:
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z ^ (z >> 31)
//! ```
//!
//! A root stream has key `mix(seed)`. Child stream `id` of a stream with key
//! k has key `mix(k ^ mix(id + 1))`; children do not advance the parent.
//! Uniform reals take the top 53 bits (`(u >> 11) * 2^-53`) and bounded
//! integers use the high half of the 128-bit product `u * n`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    key: u64,
    counter: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            key: mix(seed),
            counter: 0,
        }
    }

    pub fn split(&self, id: u64) -> Rng {
        Rng {
            key: mix(self.key ^ mix(id.wrapping_add(1))),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in 0..n; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((u128::from(self.next_u64()) * n as u128) >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    pub fn binomial(&mut self, n: usize, p: f64) -> usize {
        (0..n).filter(|_| self.bernoulli(p)).count()
    }

    /// Index drawn with probability proportional to `weights`.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut x = self.next_f64() * total;
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }
}
