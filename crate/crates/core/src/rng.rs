//! Seeded, platform-stable random source.
//!
//! Algorithm, so that streams can be reproduced outside Rust:
//! - bits: ChaCha with 8 rounds, key = `seed_from_u64(seed)` as defined by
//!   `rand_core` (PCG32 expansion of the 64-bit seed into 32 key bytes), nonce =
//!   the 64-bit stream id, block counter from 0;
//! - uniforms: `(next_u64() >> 11) * 2^-53`;
//! - normals: Box-Muller on two uniforms, `u1` shifted to `(0, 1]`, both
//!   outputs used in order (cosine branch first).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = self.normal());
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        // Lemire's multiply-shift; bias is < n / 2^64, irrelevant at our sizes
        ((self.rng.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
