//! Pinned pseudo-random generation.
//!
//! Golden files and seeded experiments must reproduce bit-for-bit on every
//! platform, so the generator is implemented here rather than taken from a
//! crate whose stream may change between releases. The generator is
//! xoshiro256** (Blackman & Vigna), seeded through SplitMix64.

use crate::Vector;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One SplitMix64 output step. Also used as the seed-derivation hash.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of an independent stream from a master seed and a stream
/// index: `splitmix64(master ^ splitmix64(index))`.
///
/// Used for per-run and per-trial streams so that parallel execution order
/// never affects results.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut s = index;
    let mixed = splitmix64(&mut s);
    let mut m = master ^ mixed;
    splitmix64(&mut m)
}

/// xoshiro256** generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xoshiro256 {
    s: [u64; 4],
}

impl Xoshiro256 {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform integer in `0..bound` by masked rejection (no modulo bias).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        if bound == 1 {
            return 0;
        }
        let mask = u64::MAX >> (bound - 1).leading_zeros();
        loop {
            let r = self.next_u64() & mask;
            if r < bound {
                return r;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via the Box–Muller transform.
    pub fn gaussian(&mut self) -> f64 {
        // 1 - u keeps the logarithm argument in (0, 1].
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn gaussian_vector(&mut self, d: usize) -> Vector {
        Vector::from_fn(d, |_, _| self.gaussian())
    }

    /// Uniform point on the unit sphere of `R^d` (normalized Gaussian).
    pub fn unit_sphere(&mut self, d: usize) -> Vector {
        loop {
            let v = self.gaussian_vector(d);
            let norm = v.norm();
            if norm > 1e-300 {
                return v / norm;
            }
        }
    }

    /// `+1.0` or `-1.0` with equal probability.
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}
