//! The random stream behind every generator.
//!
//! Xoshiro256** seeded through SplitMix64 (`seed_from_u64`), with the
//! following fixed transforms so that streams can be reproduced elsewhere:
//!
//! * uniform `[0, 1)`: `(next_u64 >> 11) * 2^-53`
//! * uniform `[-1, 1)`: `2u - 1`
//! * standard normal: Box–Muller cosine branch, `sqrt(-2 ln(1 - u1)) cos(2π u2)`
//! * Rademacher: the top bit of `next_u64`
//! * integer below `m`: Lemire's widening multiply with rejection

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct Stream(Xoshiro256StarStar);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_pm1(&mut self) -> f64 {
        2.0 * self.uniform01() - 1.0
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform01();
        let u2 = self.uniform01();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn rademacher(&mut self) -> f64 {
        if self.next_u64() >> 63 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform integer in `[0, m)`; `m` must be positive.
    pub fn below(&mut self, m: u64) -> u64 {
        debug_assert!(m > 0);
        let threshold = m.wrapping_neg() % m;
        loop {
            let wide = (self.next_u64() as u128) * (m as u128);
            if (wide as u64) >= threshold {
                return (wide >> 64) as u64;
            }
        }
    }

    /// Fisher–Yates, walking down from the last element.
    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            v.swap(i, j);
        }
    }
}
