//! Continued fractions, Ostrowski numeration and exact orbit geometry for the
//! rotation x ↦ x + α on the circle stored as 128-bit fixed point.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::wide::{frac_bits, U256};

/// 2^128 as a float.
pub const TWO_128: f64 = 340282366920938463463374607431768211456.0;
const INV_TWO_128: f64 = 1.0 / TWO_128;

/// A point of R/Z as `position / 2^128`. Addition wraps, so orbits never drift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CirclePoint(pub u128);

impl CirclePoint {
    pub const ZERO: CirclePoint = CirclePoint(0);

    /// Nearest representable point to `x mod 1` (exact for every f64).
    pub fn from_f64(x: f64) -> Self {
        let f = x - math::floor(x);
        if !(f < 1.0) || f < 0.0 {
            return CirclePoint(0);
        }
        CirclePoint((f * TWO_128) as u128)
    }

    /// Exact `p/q mod 1`, rounded down to the lattice.
    pub fn from_ratio(p: u128, q: u128) -> Self {
        CirclePoint(frac_bits(p % q, q))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 * INV_TWO_128
    }

    #[inline]
    pub fn add(self, o: CirclePoint) -> CirclePoint {
        CirclePoint(self.0.wrapping_add(o.0))
    }

    #[inline]
    pub fn sub(self, o: CirclePoint) -> CirclePoint {
        CirclePoint(self.0.wrapping_sub(o.0))
    }

    #[inline]
    pub fn neg(self) -> CirclePoint {
        CirclePoint(self.0.wrapping_neg())
    }

    /// ‖x‖ on the lattice (distance to 0 in either direction).
    #[inline]
    pub fn dist_raw(self) -> u128 {
        self.0.min(self.0.wrapping_neg())
    }

    #[inline]
    pub fn dist(self) -> f64 {
        self.dist_raw() as f64 * INV_TWO_128
    }

    /// Distances to the singularity from the right of 0 (x) and from the left (1 − x).
    #[inline]
    pub fn side_distances(self) -> (f64, f64) {
        let right = self.0 as f64 * INV_TWO_128;
        let left = self.0.wrapping_neg() as f64 * INV_TWO_128;
        if self.0 == 0 {
            (0.0, 0.0)
        } else {
            (right, left)
        }
    }
}

/// Lattice length as a fraction of the circle; `0` is the empty length.
pub fn raw_length(len: f64) -> u128 {
    if len >= 1.0 {
        u128::MAX
    } else if len <= 0.0 {
        0
    } else {
        (len * TWO_128) as u128
    }
}

pub fn length_f64(raw: u128) -> f64 {
    raw as f64 * INV_TWO_128
}

/// How an irrational is specified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaSpec {
    /// `[0; pre..., period, period, ...]`, exact for quadratic irrationals.
    Periodic { pre: Vec<u64>, period: Vec<u64> },
    /// A decimal string in (0,1), read as the digits given.
    Decimal(String),
}

impl AlphaSpec {
    pub fn golden() -> Self {
        AlphaSpec::Periodic { pre: Vec::new(), period: alloc::vec![1] }
    }

    pub fn sqrt2_minus_1() -> Self {
        AlphaSpec::Periodic { pre: Vec::new(), period: alloc::vec![2] }
    }

    fn quotient(&self, k: usize) -> u64 {
        match self {
            AlphaSpec::Periodic { pre, period } => {
                if k <= pre.len() {
                    pre[k - 1]
                } else {
                    period[(k - 1 - pre.len()) % period.len()]
                }
            }
            AlphaSpec::Decimal(_) => unreachable!(),
        }
    }
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSpec::Periodic { pre, period } => {
                let join = |v: &Vec<u64>| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
                if pre.is_empty() {
                    write!(f, "periodic:{}", join(period))
                } else {
                    write!(f, "periodic:{}|{}", join(pre), join(period))
                }
            }
            AlphaSpec::Decimal(d) => f.write_str(d),
        }
    }
}

impl FromStr for AlphaSpec {
    type Err = Error;

    /// Accepts `golden`, `sqrt2`, `periodic:a1,a2,...`, `periodic:p1,p2|a1,a2`
    /// (pre-period then period) or a decimal such as `0.4142135623`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "golden" => return Ok(AlphaSpec::golden()),
            "sqrt2" | "sqrt2-1" => return Ok(AlphaSpec::sqrt2_minus_1()),
            _ => {}
        }
        if let Some(body) = s.strip_prefix("periodic:") {
            let parse = |part: &str| -> Result<Vec<u64>> {
                part.split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| {
                        p.trim()
                            .parse::<u64>()
                            .ok()
                            .filter(|&a| a > 0)
                            .ok_or_else(|| Error::InvalidAlpha(format!("bad partial quotient `{p}`")))
                    })
                    .collect()
            };
            let (pre, period) = match body.split_once('|') {
                Some((a, b)) => (parse(a)?, parse(b)?),
                None => (Vec::new(), parse(body)?),
            };
            if period.is_empty() {
                return Err(Error::InvalidAlpha("empty period".into()));
            }
            return Ok(AlphaSpec::Periodic { pre, period });
        }
        let digits = s.strip_prefix('0').unwrap_or(s);
        let frac = digits
            .strip_prefix('.')
            .ok_or_else(|| Error::InvalidAlpha(format!("expected a decimal in (0,1) or periodic:..., got `{s}`")))?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::InvalidAlpha(format!("bad decimal `{s}`")));
        }
        Ok(AlphaSpec::Decimal(s.into()))
    }
}

/// Provenance of the stored quotients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precision {
    /// Quotients come from an exact periodic description.
    pub exact: bool,
    /// Decimal input: the requested n used every quotient the digits determine.
    pub digits_exhausted: bool,
    /// Decimal input: the largest n the digits determine.
    pub safe_n: Option<usize>,
}

/// An irrational frequency with its continued-fraction data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlphaContext {
    pub spec: AlphaSpec,
    /// α·2^128.
    pub alpha: u128,
    /// a_1..a_n (`quotients[k-1] = a_k`).
    pub quotients: Vec<u64>,
    /// q_0..q_n.
    pub q: Vec<u128>,
    /// p_0..p_n.
    pub p: Vec<u128>,
    pub precision: Precision,
}

fn convergents(quotients: &[u64]) -> Result<(Vec<u128>, Vec<u128>)> {
    let mut q = alloc::vec![1u128];
    let mut p = alloc::vec![0u128];
    let (mut q_prev, mut p_prev) = (0u128, 1u128);
    for (k, &a) in quotients.iter().enumerate() {
        let (qn, pn) = (*q.last().unwrap(), *p.last().unwrap());
        let next_q = (a as u128)
            .checked_mul(qn)
            .and_then(|v| v.checked_add(q_prev))
            .filter(|&v| v < (1u128 << 127))
            .ok_or(Error::DenominatorOverflow(k))?;
        let next_p = (a as u128).checked_mul(pn).and_then(|v| v.checked_add(p_prev)).ok_or(Error::DenominatorOverflow(k))?;
        q_prev = qn;
        p_prev = pn;
        q.push(next_q);
        p.push(next_p);
    }
    Ok((q, p))
}

/// Partial quotients of num/den ∈ [0,1) until the expansion terminates.
fn rational_cf(mut num: u128, mut den: u128) -> Vec<u64> {
    let mut out = Vec::new();
    while num != 0 {
        // swap into den/num
        let a = den / num;
        out.push(a as u64);
        let r = den % num;
        den = num;
        num = r;
    }
    out
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Build the context with `n_max` partial quotients.
pub fn expand_cf(spec: &AlphaSpec, n_max: usize) -> Result<AlphaContext> {
    if n_max == 0 {
        return Err(crate::error::invalid("n_max", "must be at least 1"));
    }
    match spec {
        AlphaSpec::Periodic { .. } => {
            let quotients: Vec<u64> = (1..=n_max).map(|k| spec.quotient(k)).collect();
            let (q, p) = convergents(&quotients)?;
            // Extend privately until q > 2^66 so p/q pins α below 2^-132.
            let mut ext = quotients.clone();
            let (mut eq, mut ep) = (q.clone(), p.clone());
            while *eq.last().unwrap() < (1u128 << 66) {
                ext.push(spec.quotient(ext.len() + 1));
                match convergents(&ext) {
                    Ok((a, b)) => {
                        eq = a;
                        ep = b;
                    }
                    Err(_) => break,
                }
            }
            let alpha = frac_bits(*ep.last().unwrap(), *eq.last().unwrap());
            Ok(AlphaContext {
                spec: spec.clone(),
                alpha,
                quotients,
                q,
                p,
                precision: Precision { exact: true, digits_exhausted: false, safe_n: None },
            })
        }
        AlphaSpec::Decimal(s) => {
            let frac = s.trim().trim_start_matches('0').trim_start_matches('.');
            // 38 digits is the most a u128 numerator over 10^k can carry.
            let digits: &str = if frac.len() > 38 { &frac[..38] } else { frac };
            let k = digits.len() as u32;
            let d: u128 = digits.parse().map_err(|_| Error::InvalidAlpha(s.clone()))?;
            let den = 10u128.pow(k);
            if d == 0 {
                return Err(Error::RationalInput { denominator: 1 });
            }
            let g = gcd(d, den);
            let reduced_den = den / g;
            let lo = rational_cf(d, den);
            // A terminating expansion whose denominator is far smaller than the
            // digit count supports is the decimal of a rational, not a truncation.
            if reduced_den.checked_mul(reduced_den).is_some_and(|v| v < den) {
                return Err(Error::RationalInput { denominator: reduced_den });
            }
            let hi = rational_cf(d + 1, den);
            let mut safe = 0;
            while safe + 1 < lo.len() && safe + 1 < hi.len() && lo[safe] == hi[safe] {
                safe += 1;
            }
            if n_max > safe {
                return Err(Error::InsufficientPrecision { requested: n_max, largest_safe: safe });
            }
            let quotients = lo[..n_max].to_vec();
            let (q, p) = convergents(&quotients)?;
            let alpha = U256::new(2 * d + 1, 0).divrem(2 * den).0;
            Ok(AlphaContext {
                spec: spec.clone(),
                alpha,
                quotients,
                q,
                p,
                precision: Precision { exact: false, digits_exhausted: n_max == safe, safe_n: Some(safe) },
            })
        }
    }
}

impl AlphaContext {
    pub fn n_max(&self) -> usize {
        self.quotients.len()
    }

    /// a_k for 1 ≤ k ≤ n_max.
    pub fn a(&self, k: usize) -> u64 {
        self.quotients[k - 1]
    }

    pub fn alpha_point(&self) -> CirclePoint {
        CirclePoint(self.alpha)
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha as f64 * INV_TWO_128
    }

    /// q_n as a float (table lookup).
    pub fn qf(&self, n: usize) -> f64 {
        self.q[n] as f64
    }
}

/// Greedy expansion N = Σ b_j q_j.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OstrowskiExpansion {
    /// `coefficients[j]` multiplies q_j.
    pub coefficients: Vec<u64>,
    pub target: u128,
}

impl OstrowskiExpansion {
    pub fn reconstruct(&self, ctx: &AlphaContext) -> u128 {
        self.coefficients.iter().enumerate().map(|(j, &b)| b as u128 * ctx.q[j]).sum()
    }

    /// Legality: b_0 < a_1, b_j ≤ a_{j+1}, and b_j = a_{j+1} forces b_{j−1} = 0.
    pub fn is_legal(&self, ctx: &AlphaContext) -> bool {
        for (j, &b) in self.coefficients.iter().enumerate() {
            let a_next = ctx.a(j + 1);
            if j == 0 {
                if b >= a_next {
                    return false;
                }
            } else if b > a_next || (b == a_next && self.coefficients[j - 1] != 0) {
                return false;
            }
        }
        true
    }

    /// Block decomposition from the top: (start offset, block length q_j), in summation order.
    pub fn blocks(&self, ctx: &AlphaContext) -> Vec<(u128, u128)> {
        let mut out = Vec::new();
        let mut start = 0u128;
        for j in (0..self.coefficients.len()).rev() {
            for _ in 0..self.coefficients[j] {
                out.push((start, ctx.q[j]));
                start += ctx.q[j];
            }
        }
        out
    }
}

pub fn ostrowski(n: u128, ctx: &AlphaContext) -> Result<OstrowskiExpansion> {
    let limit = *ctx.q.last().unwrap();
    if n == 0 || n >= limit {
        return Err(Error::OutOfTable { value: n as f64, limit });
    }
    // top index must leave a_{j+1} available for the legality check
    let top = ctx.q.len() - 2;
    let mut coefficients = alloc::vec![0u64; top + 1];
    let mut rem = n;
    for j in (0..=top).rev() {
        let b = rem / ctx.q[j];
        coefficients[j] = b as u64;
        rem -= b * ctx.q[j];
    }
    debug_assert_eq!(rem, 0);
    while coefficients.len() > 1 && *coefficients.last().unwrap() == 0 {
        coefficients.pop();
    }
    Ok(OstrowskiExpansion { coefficients, target: n })
}

/// x + jα mod 1, exactly on the lattice.
#[inline]
pub fn orbit_point(x: CirclePoint, j: i64, ctx: &AlphaContext) -> CirclePoint {
    CirclePoint(x.0.wrapping_add((j as i128 as u128).wrapping_mul(ctx.alpha)))
}

#[inline]
fn addmod(x: u128, y: u128, m: u128) -> u128 {
    // x, y < m, m != 0
    if x >= m - y {
        x - (m - y)
    } else {
        x + y
    }
}

/// `m mod d` where `m = 0` encodes 2^128.
#[inline]
fn modulus_rem(m: u128, d: u128) -> u128 {
    if m == 0 {
        ((u128::MAX % d) + 1) % d
    } else {
        m % d
    }
}

/// min over 0 ≤ x < n of (a·x + b) mod m, with the smallest minimising x.
/// `m = 0` encodes 2^128; requires a, b < m.
///
/// Euclid-like descent: when a ≤ m/2 only the landing values after each
/// wrap can be new minima, and they form a progression mod a; when a > m/2
/// the sequence descends by m − a and only run ends matter, forming a
/// progression mod m − a. Either way the modulus at least halves.
fn min_lin(n: u128, m: u128, a: u128, b: u128) -> Option<(u128, u128)> {
    if n == 0 {
        return None;
    }
    if a == 0 || n == 1 {
        return Some((b, 0));
    }
    let ascending = if m == 0 { a <= 1u128 << 127 } else { a <= m / 2 };
    let top = U256::mul(a, n - 1).add_u128(b);
    let (wraps, last) = top.divrem_mod(m);
    if ascending {
        if wraps == 0 {
            return Some((b, 0));
        }
        let c = (a - modulus_rem(m, a)) % a;
        let b1 = addmod(b % a, c, a);
        match min_lin(wraps, a, c, b1) {
            Some((v, k0)) if v < b => {
                // landing index for wrap k = k0 + 1: ceil((k·m − b)/a)
                let k = k0 + 1;
                let km = if m == 0 { U256::new(k, 0) } else { U256::mul(k, m) };
                let num = km.sub_u128(b).add_u128(a - 1);
                Some((v, num.divrem(a).0))
            }
            _ => Some((b, 0)),
        }
    } else {
        let a2 = if m == 0 { a.wrapping_neg() } else { m - a };
        let runs = (n - 1) - wraps;
        let step = modulus_rem(m, a2);
        let mut best = (last, n - 1);
        if let Some((v, k0)) = min_lin(runs, a2, step, b % a2) {
            if v <= last {
                let km = if m == 0 { U256::new(k0, 0) } else { U256::mul(k0, m) };
                best = (v, km.add_u128(b).divrem(a2).0);
            }
        }
        Some(best)
    }
}

/// min over 0 ≤ j < n of (b + j·a) mod 2^128 and the first minimiser.
pub fn min_mod_linear(n: u128, a: u128, b: u128) -> Option<(u128, u128)> {
    min_lin(n, 0, a, b)
}

/// Closest approach of the orbit segment {x + jα : 0 ≤ j < N} to 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinDistance {
    /// ‖x + jα‖·2^128.
    pub raw: u128,
    pub index: u64,
}

impl MinDistance {
    pub fn distance(&self) -> f64 {
        length_f64(self.raw)
    }
}

/// x_min^N via the descent; agrees bit-exactly with [`orbit_min_distance_scan`].
pub fn orbit_min_distance(x: CirclePoint, n: u64, ctx: &AlphaContext) -> MinDistance {
    assert!(n >= 1, "orbit_min_distance needs N >= 1");
    let (v1, i1) = min_lin(n as u128, 0, ctx.alpha, x.0).unwrap();
    let (v2, i2) = min_lin(n as u128, 0, ctx.alpha.wrapping_neg(), x.0.wrapping_neg()).unwrap();
    let (raw, index) = match v1.cmp(&v2) {
        core::cmp::Ordering::Less => (v1, i1),
        core::cmp::Ordering::Greater => (v2, i2),
        core::cmp::Ordering::Equal => (v1, i1.min(i2)),
    };
    MinDistance { raw, index: index as u64 }
}

/// O(N) reference scan, first minimiser wins.
pub fn orbit_min_distance_scan(x: CirclePoint, n: u64, ctx: &AlphaContext) -> MinDistance {
    let mut best = MinDistance { raw: u128::MAX, index: 0 };
    let mut y = x;
    for j in 0..n {
        let d = y.dist_raw();
        if d < best.raw {
            best = MinDistance { raw: d, index: j };
        }
        y = y.add(ctx.alpha_point());
    }
    best
}

/// Some m in [m0, m0 + count) with 0 strictly inside R^m(I), I = (left, left + len).
/// Equivalently −mα lands in the open interval.
pub fn interior_hit(left: CirclePoint, len: u128, m0: i64, count: u64, ctx: &AlphaContext) -> Option<i64> {
    if len < 2 || count == 0 {
        return None;
    }
    // value(m) = (−(m0+m)α − left − 1) mod 2^128; hit iff value < len − 1
    let start = orbit_point(CirclePoint::ZERO, -m0, ctx).sub(left).0.wrapping_sub(1);
    let (v, m) = min_lin(count as u128, 0, ctx.alpha.wrapping_neg(), start)?;
    if v < len - 1 {
        Some(m0 + m as i64)
    } else {
        None
    }
}

/// Unique n with q_n ≤ scale·t < q_{n+1}.
pub fn denominator_bracket(t: f64, ctx: &AlphaContext, scale: f64) -> Result<usize> {
    let s = scale * t;
    let limit = *ctx.q.last().unwrap();
    if !(s >= 1.0) || s >= limit as f64 {
        return Err(Error::OutOfTable { value: s, limit });
    }
    // largest n with q_n ≤ s; q_0 = q_1 = 1 resolves to the larger index
    let mut n = 0;
    for (k, &q) in ctx.q.iter().enumerate() {
        if (q as f64) <= s {
            n = k;
        } else {
            break;
        }
    }
    if n + 1 >= ctx.q.len() {
        return Err(Error::OutOfTable { value: s, limit });
    }
    Ok(n)
}

/// Empirical constants for the two diophantine conditions over the table.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiophantineReport {
    /// max q_{n+1} / (q_n log² q_n) over n with q_n ≥ 3.
    pub c_log_squared: f64,
    /// max q_{n+1} / q_n^{1+γ/100}.
    pub c_power: f64,
    pub n_from: usize,
    pub n_to: usize,
}

pub fn classify_diophantine(ctx: &AlphaContext, gamma: f64) -> DiophantineReport {
    let mut c1: f64 = 0.0;
    let mut c2: f64 = 0.0;
    let mut from = usize::MAX;
    let mut to = 0;
    for n in 0..ctx.q.len() - 1 {
        let qn = ctx.qf(n);
        if qn < 3.0 {
            continue;
        }
        from = from.min(n);
        to = n;
        let l = math::ln(qn);
        c1 = c1.max(ctx.qf(n + 1) / (qn * l * l));
        c2 = c2.max(ctx.qf(n + 1) / math::pow(qn, 1.0 + gamma / 100.0));
    }
    DiophantineReport { c_log_squared: c1, c_power: c2, n_from: if from == usize::MAX { 0 } else { from }, n_to: to }
}
