//! Random streams.
//!
//! Every stream is a xoshiro256** generator whose 256-bit state is expanded
//! from a 64-bit seed with splitmix64 (`Xoshiro256StarStar::seed_from_u64`).
//! Independent runs get their own seed from [`derive_seed`]:
//!
//! ```text
//! seed_i = mix64(master ^ (0x9E3779B97F4A7C15 * (i + 1)))
//! ```
//!
//! where `mix64` is the splitmix64 finalizer. The multiplier is odd and
//! `mix64` is a bijection, so distinct indexes always yield distinct seeds.

use rand::{Rng, SeedableRng};
pub use rand_xoshiro::Xoshiro256StarStar as SimRng;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer; a bijection on `u64`.
pub const fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub const fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1)))
}

pub fn stream(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Uniform integer in `[0, n)`; `n` must be nonzero.
#[inline]
pub fn uniform_index<R: Rng + ?Sized>(rng: &mut R, n: u32) -> u32 {
    rng.random_range(0..n)
}

/// Uniform real in `[low, high)`.
#[inline]
pub fn uniform_real<R: Rng + ?Sized>(rng: &mut R, low: f64, high: f64) -> f64 {
    low + (high - low) * rng.random::<f64>()
}
