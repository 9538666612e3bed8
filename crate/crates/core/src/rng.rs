//! Seeded substreams. Every random quantity is drawn from a ChaCha8 stream
//! keyed by (seed, purpose, index), so results do not depend on scheduling.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub type Rng = ChaCha8Rng;

/// Purpose tags keep unrelated consumers of one seed apart.
pub mod tag {
    pub const ES: u64 = 1;
    pub const SAMPLER: u64 = 2;
    pub const BLOCK: u64 = 3;
    pub const LEMMA: u64 = 4;
    pub const TOWER: u64 = 5;
    pub const FLOW_PROPS: u64 = 6;
    pub const ALMOST_MP: u64 = 7;
}

pub fn stream(seed: u64, purpose: u64, index: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    r.set_stream(index);
    r
}

/// Uniform in [0,1) with 53 random bits.
#[inline]
pub fn uniform(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Uniform over the full 128-bit circle lattice.
#[inline]
pub fn uniform_u128(rng: &mut Rng) -> u128 {
    ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128
}

#[inline]
pub fn uniform_range(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Uniform integer in [lo, hi].
#[inline]
pub fn uniform_int(rng: &mut Rng, lo: u64, hi: u64) -> u64 {
    let span = hi - lo + 1;
    lo + ((rng.next_u64() as u128 * span as u128) >> 64) as u64
}

/// Standard normal by Box–Muller.
pub fn normal(rng: &mut Rng) -> f64 {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    crate::math::sqrt(-2.0 * crate::math::ln(u1)) * crate::math::cos(2.0 * core::f64::consts::PI * u2)
}
