//! Replayable random streams.
//!
//! Every random decision in the toolkit comes from an [`RngStream`] derived
//! from `(seed, index, tag)`. The algorithms are fixed so outputs can be
//! reproduced bit-for-bit by other implementations:
//!
//! * seeding: `x = seed ^ mix(index) ^ fnv1a64(tag)`, then four SplitMix64
//!   steps (`x += 0x9E3779B97F4A7C15; word = finalize(x)`) fill the state,
//!   where `mix(i) = finalize(i + 0x9E3779B97F4A7C15)`;
//! * stream: xoshiro256**;
//! * uniform: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`;
//! * normal: Box-Muller on two uniforms `u1, u2` with
//!   `r = sqrt(-2 ln(1 - u1))`, emitting `r cos(2 pi u2)` then `r sin(2 pi u2)`.

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// The SplitMix64 output finalizer.
#[inline]
pub fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix_index(index: u64) -> u64 {
    splitmix64_finalize(index.wrapping_add(GOLDEN_GAMMA))
}

/// 64-bit FNV-1a over the UTF-8 bytes of `tag`.
pub fn hash_tag(tag: &str) -> u64 {
    tag.bytes().fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Where a stream came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamOrigin {
    pub seed: u64,
    pub index: u64,
    pub tag: String,
}

/// A xoshiro256** stream keyed by `(seed, index, tag)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    state: [u64; 4],
    spare_normal: Option<f64>,
    origin: StreamOrigin,
}

impl RngStream {
    pub fn derive(seed: u64, index: u64, tag: &str) -> Self {
        let mut x = seed ^ mix_index(index) ^ hash_tag(tag);
        let mut state = [0u64; 4];
        for word in &mut state {
            x = x.wrapping_add(GOLDEN_GAMMA);
            *word = splitmix64_finalize(x);
        }
        Self {
            state,
            spare_normal: None,
            origin: StreamOrigin {
                seed,
                index,
                tag: tag.to_owned(),
            },
        }
    }

    pub fn origin(&self) -> &StreamOrigin {
        &self.origin
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform over `{lo, ..., hi_inclusive}` by rejection sampling.
    pub fn next_int(&mut self, lo: i64, hi_inclusive: i64) -> Result<i64> {
        if lo > hi_inclusive {
            return Err(Error::InvalidArgument(format!(
                "empty integer range [{lo}, {hi_inclusive}]"
            )));
        }
        let span = hi_inclusive.wrapping_sub(lo) as u64;
        if span == u64::MAX {
            return Ok(self.next_u64() as i64);
        }
        let n = span + 1;
        // Accept x in [2^64 mod n, 2^64): a whole number of copies of 0..n.
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return Ok(lo.wrapping_add((x % n) as i64));
            }
        }
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        self.next_int(0, n as i64 - 1).expect("n > 0") as usize
    }

    /// Standard normal variate.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.next_unit();
        let u2 = self.next_unit();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Fisher-Yates permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.next_index(i + 1);
            perm.swap(i, j);
        }
        perm
    }
}

/// Shorthand for [`RngStream::derive`].
pub fn derive_stream(seed: u64, index: u64, tag: &str) -> RngStream {
    RngStream::derive(seed, index, tag)
}
