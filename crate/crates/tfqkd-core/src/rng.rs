//! Deterministic random sampling. All randomness in the crate flows from a
//! single u64 seed through ChaCha8; shard seeds are derived, never ambient.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Crate-wide RNG: seeded, portable, and fast enough for 1e12-trial
/// aggregated sampling.
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Deterministically derive an independent stream for shard `index`.
    pub fn derive(seed: u64, index: u64) -> Self {
        // splitmix-style mixing keeps shard streams decorrelated
        let mut z = seed ^ (index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Rng::new(z ^ (z >> 31))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: u64) -> u64 {
        // rejection sampling removes modulo bias
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Standard normal via Box-Muller.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Poisson sample; Knuth multiplication for small means, normal
    /// approximation with continuity correction beyond.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        if mean < 30.0 {
            let l = libm::exp(-mean);
            let mut k = 0u64;
            let mut p = 1.0;
            loop {
                p *= self.uniform();
                if p < l {
                    return k;
                }
                k += 1;
            }
        }
        let x = mean + libm::sqrt(mean) * self.standard_normal();
        if x < 0.0 {
            0
        } else {
            (x + 0.5) as u64
        }
    }

    /// Binomial sample over `n` trials with success probability `p`.
    /// Exact inversion for small n; Poisson or normal limits otherwise.
    pub fn binomial(&mut self, n: u64, p: f64) -> u64 {
        if p <= 0.0 || n == 0 {
            return 0;
        }
        if p >= 1.0 {
            return n;
        }
        let mean = n as f64 * p;
        if n <= 64 {
            let mut k = 0;
            for _ in 0..n {
                if self.bernoulli(p) {
                    k += 1;
                }
            }
            return k;
        }
        if p < 1e-4 && mean < 1e7 {
            // rare-event limit; clamp to the trial count
            return self.poisson(mean).min(n);
        }
        let sd = libm::sqrt(mean * (1.0 - p));
        let x = mean + sd * self.standard_normal();
        if x < 0.0 {
            0
        } else if x > n as f64 {
            n
        } else {
            (x + 0.5) as u64
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_determinism() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derived_streams_differ() {
        let mut a = Rng::derive(7, 0);
        let mut b = Rng::derive(7, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn normal_moments() {
        let mut r = Rng::new(1);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = r.standard_normal();
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean = {mean}");
        assert!((var - 1.0).abs() < 0.02, "var = {var}");
    }

    #[test]
    fn binomial_mean_large_n_small_p() {
        let mut r = Rng::new(2);
        let n_trials = 200;
        let mut total = 0u64;
        for _ in 0..n_trials {
            total += r.binomial(2_000_000_000, 1e-7);
        }
        let mean = total as f64 / n_trials as f64;
        // expected 200, sd of the mean ~ 1
        assert!((mean - 200.0).abs() < 5.0, "mean = {mean}");
    }

    #[test]
    fn poisson_small_mean() {
        let mut r = Rng::new(3);
        let n = 100_000;
        let mut total = 0u64;
        for _ in 0..n {
            total += r.poisson(0.37);
        }
        let mean = total as f64 / n as f64;
        assert!((mean - 0.37).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn shuffle_preserves_multiset() {
        let mut r = Rng::new(4);
        let mut xs: alloc::vec::Vec<u32> = (0..50).collect();
        r.shuffle(&mut xs);
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<alloc::vec::Vec<u32>>());
    }
}
