//! Double-double accumulation.
//!
//! Birkhoff sums mix terms near 10^24 with O(1) terms; plain f64 loses the
//! O(q^γ) deviations the estimates are about. A pair (hi, lo) with error-free
//! transformations keeps roughly 106 bits.

use serde::{Deserialize, Serialize};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Dd {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn sub(self, b: Dd) -> Dd {
        self.add(b.neg())
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Running compensated sum that also tracks Σ|term| for the error bound.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    pub sum: Dd,
    pub abs: f64,
    pub count: u64,
}

impl Accumulator {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.sum = self.sum.add_f64(x);
        self.abs += x.abs();
        self.count += 1;
    }

    pub fn value(&self) -> f64 {
        self.sum.to_f64()
    }

    /// Bound on |computed − exact sum of the f64 terms| plus the per-term
    /// rounding of evaluating the terms in double precision.
    pub fn error_bound(&self) -> f64 {
        let u = f64::EPSILON * 0.5;
        let n = self.count as f64;
        // term evaluation (a few ulps each) dominates the double-double sum error
        4.0 * u * self.abs + n * u * u * self.abs + u * self.value().abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_small_terms_next_to_huge_ones() {
        let mut a = Accumulator::default();
        a.push(1e24);
        for _ in 0..1000 {
            a.push(1.0);
        }
        a.push(-1e24);
        assert_eq!(a.value(), 1000.0);
    }

    #[test]
    fn dd_sub_cancels() {
        let x = Dd::from_f64(1e20).add_f64(3.25);
        let y = Dd::from_f64(1e20);
        assert_eq!(x.sub(y).to_f64(), 3.25);
    }
}
