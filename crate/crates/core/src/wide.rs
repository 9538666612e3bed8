//! Just enough 256-bit unsigned arithmetic for exact orbit geometry on the
//! 2^128 circle.

/// Unsigned 256-bit value `hi·2^128 + lo`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct U256 {
    pub hi: u128,
    pub lo: u128,
}

const MASK64: u128 = u64::MAX as u128;

impl U256 {
    pub const fn new(hi: u128, lo: u128) -> Self {
        U256 { hi, lo }
    }

    pub fn mul(a: u128, b: u128) -> U256 {
        let (a1, a0) = (a >> 64, a & MASK64);
        let (b1, b0) = (b >> 64, b & MASK64);
        let p00 = a0 * b0;
        let p01 = a0 * b1;
        let p10 = a1 * b0;
        let p11 = a1 * b1;
        let mid = (p00 >> 64) + (p01 & MASK64) + (p10 & MASK64);
        let lo = (p00 & MASK64) | (mid << 64);
        let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
        U256 { hi, lo }
    }

    pub fn add_u128(self, b: u128) -> U256 {
        let (lo, c) = self.lo.overflowing_add(b);
        U256 { hi: self.hi + c as u128, lo }
    }

    pub fn sub_u128(self, b: u128) -> U256 {
        let (lo, c) = self.lo.overflowing_sub(b);
        U256 { hi: self.hi - c as u128, lo }
    }

    /// Quotient and remainder by `d`; the quotient must fit in 128 bits.
    pub fn divrem(self, d: u128) -> (u128, u128) {
        assert!(d != 0 && self.hi < d, "U256::divrem quotient overflow");
        if self.hi == 0 {
            return (self.lo / d, self.lo % d);
        }
        let mut rem = self.hi;
        let mut q: u128 = 0;
        for i in (0..128).rev() {
            let carry = rem >> 127;
            rem = (rem << 1) | ((self.lo >> i) & 1);
            q <<= 1;
            if carry == 1 || rem >= d {
                rem = rem.wrapping_sub(d);
                q |= 1;
            }
        }
        (q, rem)
    }

    /// Quotient and remainder by a modulus where `0` encodes 2^128.
    pub fn divrem_mod(self, m: u128) -> (u128, u128) {
        if m == 0 {
            (self.hi, self.lo)
        } else {
            self.divrem(m)
        }
    }
}

/// `floor(p · 2^128 / q)` for `p < q`.
pub fn frac_bits(p: u128, q: u128) -> u128 {
    U256::new(p, 0).divrem(q).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_matches_split_products() {
        let a = u128::MAX;
        let w = U256::mul(a, a);
        // (2^128-1)^2 = 2^256 - 2^129 + 1
        assert_eq!(w.lo, 1);
        assert_eq!(w.hi, u128::MAX - 1);
    }

    #[test]
    fn divrem_roundtrip() {
        let d = 0x1234_5678_9abc_def0_1357_9bdf_0246_8acau128;
        let q = 0xdead_beef_cafe_f00du128;
        let r = 12345u128;
        let w = U256::mul(d, q).add_u128(r);
        assert_eq!(w.divrem(d), (q, r));
    }

    #[test]
    fn golden_bits() {
        // floor(2^128 / 3)
        assert_eq!(frac_bits(1, 3), u128::MAX / 3);
    }
}
