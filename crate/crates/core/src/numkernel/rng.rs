//! Seeded uniform generator.
//!
//! The stream is xoshiro256++ seeded through SplitMix64 (`seed_from_u64` of
//! `rand_xoshiro`, which that crate keeps value-stable). Doubles are formed
//! from the top 53 bits as `(k + 0.5) / 2^53`, so every draw lies strictly
//! inside `(0, 1)`.

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct UniformRng {
    inner: Xoshiro256PlusPlus,
}

impl UniformRng {
    pub fn seeded(seed: u64) -> Self {
        Self { inner: Xoshiro256PlusPlus::seed_from_u64(seed) }
    }

    pub fn next_open01(&mut self) -> f64 {
        let k = self.inner.next_u64() >> 11;
        (k as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_open01()
    }
}

pub fn rng_uniform(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = UniformRng::seeded(seed);
    (0..n).map(|_| rng.next_open01()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(rng_uniform(42, 3), rng_uniform(42, 3));
        assert_ne!(rng_uniform(42, 1)[0], rng_uniform(43, 1)[0]);
    }

    #[test]
    fn open_unit_interval_and_mean() {
        let xs = rng_uniform(42, 100_000);
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }
}
