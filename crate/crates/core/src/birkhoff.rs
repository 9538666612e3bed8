//! Birkhoff sums of Φ, Φ′, Φ″ along rotation orbits, hitting counts, and the
//! Denjoy–Koksma estimate checker.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::arithmetic::{orbit_min_distance, orbit_point, ostrowski, AlphaContext, CirclePoint, TWO_128};
use crate::dd::{Accumulator, Dd};
use crate::error::{Error, Result};
use crate::math;
use crate::rng;
use crate::roof::{RoofFunction, Selector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffResult {
    pub value: f64,
    pub error_bound: f64,
    pub n: i64,
    /// Closest approach to 0 over the summed points.
    pub min_distance: f64,
    pub hit_singularity: bool,
}

const INV: f64 = 1.0 / TWO_128;

/// Sum f(x + iα) for i in [start, start + count) into `acc`.
/// Returns the smallest raw distance seen, or the offending index on a guard hit.
#[inline]
fn accumulate(
    roof: &RoofFunction,
    order: u8,
    x: CirclePoint,
    start: i64,
    count: u64,
    ctx: &AlphaContext,
    acc: &mut Accumulator,
) -> core::result::Result<u128, (i64, u128)> {
    let guard = roof.guard_raw();
    let a = ctx.alpha;
    let mut y = orbit_point(x, start, ctx).0;
    let mut best = u128::MAX;
    for i in 0..count {
        let neg = y.wrapping_neg();
        let d = y.min(neg);
        if d < guard {
            return Err((start + i as i64, d));
        }
        best = best.min(d);
        acc.push(roof.eval_sides(y as f64 * INV, neg as f64 * INV, order));
        y = y.wrapping_add(a);
    }
    Ok(best)
}

/// S_N f(x) with the negative-time convention S_{−n} = −f(T⁻¹x) − … − f(T⁻ⁿx).
/// Never fails: a guard hit is reported through `hit_singularity` and a NaN value.
pub fn birkhoff_sum_report(roof: &RoofFunction, sel: Selector, x: CirclePoint, n: i64, ctx: &AlphaContext) -> BirkhoffResult {
    let mut acc = Accumulator::default();
    let (start, count) = if n >= 0 { (0, n as u64) } else { (n, n.unsigned_abs()) };
    match accumulate(roof, sel.order(), x, start, count, ctx, &mut acc) {
        Ok(best) => {
            let sign = if n >= 0 { 1.0 } else { -1.0 };
            BirkhoffResult {
                value: sign * acc.value(),
                error_bound: acc.error_bound(),
                n,
                min_distance: if count == 0 { f64::INFINITY } else { best as f64 * INV },
                hit_singularity: false,
            }
        }
        Err((_, d)) => BirkhoffResult { value: f64::NAN, error_bound: f64::INFINITY, n, min_distance: d as f64 * INV, hit_singularity: true },
    }
}

pub fn birkhoff_sum(roof: &RoofFunction, sel: Selector, x: CirclePoint, n: i64, ctx: &AlphaContext) -> Result<BirkhoffResult> {
    let mut acc = Accumulator::default();
    let (start, count) = if n >= 0 { (0, n as u64) } else { (n, n.unsigned_abs()) };
    let best = accumulate(roof, sel.order(), x, start, count, ctx, &mut acc)
        .map_err(|(i, d)| Error::SingularityProximity { distance: d as f64 * INV, index: i })?;
    let sign = if n >= 0 { 1.0 } else { -1.0 };
    Ok(BirkhoffResult {
        value: sign * acc.value(),
        error_bound: acc.error_bound(),
        n,
        min_distance: if count == 0 { f64::INFINITY } else { best as f64 * INV },
        hit_singularity: false,
    })
}

/// Memo of q_j-block sums keyed by (start point, length, selector).
#[derive(Default, Debug, Clone)]
pub struct BlockCache {
    map: BTreeMap<(u128, u128, u8), (Accumulator, u128)>,
    pub hits: u64,
    pub misses: u64,
}

impl BlockCache {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// S_N via the Ostrowski split into q_j-blocks, summing each block once.
pub fn fast_block_sum(roof: &RoofFunction, sel: Selector, x: CirclePoint, n: i64, ctx: &AlphaContext) -> Result<BirkhoffResult> {
    let mut cache = BlockCache::default();
    fast_block_sum_cached(roof, sel, x, n, ctx, &mut cache)
}

pub fn fast_block_sum_cached(
    roof: &RoofFunction,
    sel: Selector,
    x: CirclePoint,
    n: i64,
    ctx: &AlphaContext,
    cache: &mut BlockCache,
) -> Result<BirkhoffResult> {
    if n == 0 {
        return Ok(BirkhoffResult { value: 0.0, error_bound: 0.0, n, min_distance: f64::INFINITY, hit_singularity: false });
    }
    let (base, count) = if n > 0 { (x, n as u128) } else { (orbit_point(x, n, ctx), n.unsigned_abs() as u128) };
    let exp = ostrowski(count, ctx)?;
    let mut total = Dd::ZERO;
    let mut abs = 0.0;
    let mut terms = 0u64;
    let mut best = u128::MAX;
    for (start, len) in exp.blocks(ctx) {
        let p = orbit_point(base, start as i64, ctx);
        let key = (p.0, len, sel.order());
        let (acc, b) = match cache.map.get(&key) {
            Some(v) => {
                cache.hits += 1;
                *v
            }
            None => {
                cache.misses += 1;
                let mut acc = Accumulator::default();
                let b = accumulate(roof, sel.order(), p, 0, len as u64, ctx, &mut acc)
                    .map_err(|(i, d)| Error::SingularityProximity { distance: d as f64 * INV, index: i + start as i64 })?;
                cache.map.insert(key, (acc, b));
                (acc, b)
            }
        };
        total = total.add(acc.sum);
        abs += acc.abs;
        terms += acc.count;
        best = best.min(b);
    }
    let merged = Accumulator { sum: total, abs, count: terms };
    let sign = if n > 0 { 1.0 } else { -1.0 };
    Ok(BirkhoffResult {
        value: sign * merged.value(),
        error_bound: merged.error_bound(),
        n,
        min_distance: best as f64 * INV,
        hit_singularity: false,
    })
}

/// The unique N with 0 ≤ r + t − S_N Φ(x) < Φ(T^N x), and r′ = r + t − S_N.
///
/// Terms are generated in geometrically growing chunks; the crossing is then
/// located inside the last chunk and re-verified.
pub fn hitting_count(roof: &RoofFunction, ctx: &AlphaContext, x: CirclePoint, r: f64, t: f64) -> Result<(i64, f64)> {
    let tau = r + t;
    let guard = roof.guard_raw();
    let a = ctx.alpha;
    let mut s = Dd::ZERO;
    let mut n: i64 = 0;
    let term = |y: u128, i: i64| -> Result<f64> {
        let neg = y.wrapping_neg();
        if y.min(neg) < guard {
            return Err(Error::SingularityProximity { distance: y.min(neg) as f64 * INV, index: i });
        }
        Ok(roof.eval_sides(y as f64 * INV, neg as f64 * INV, 0))
    };
    if tau >= 0.0 {
        let mut y = x.0;
        let mut chunk = 16usize;
        let mut buf: Vec<f64> = Vec::with_capacity(chunk);
        loop {
            buf.clear();
            let mut probe = s;
            let mut yy = y;
            for k in 0..chunk {
                let f = term(yy, n + k as i64)?;
                buf.push(f);
                probe = probe.add_f64(f);
                yy = yy.wrapping_add(a);
            }
            if probe.sub(Dd::from_f64(tau)).to_f64() <= 0.0 && probe.to_f64() <= tau {
                s = probe;
                n += chunk as i64;
                y = yy;
                chunk = (chunk * 2).min(1 << 20);
                continue;
            }
            // the crossing is inside this chunk
            for &f in &buf {
                let next = s.add_f64(f);
                if Dd::from_f64(tau).sub(next).to_f64() < 0.0 {
                    break;
                }
                s = next;
                n += 1;
            }
            break;
        }
    } else {
        let mut y = x.0;
        while Dd::from_f64(tau).sub(s).to_f64() < 0.0 {
            y = y.wrapping_sub(a);
            n -= 1;
            s = s.add_f64(-term(y, n)?);
        }
    }
    let rr = Dd::from_f64(tau).sub(s).to_f64();
    let top = term(orbit_point(x, n, ctx).0, n)?;
    debug_assert!(rr >= 0.0 && rr < top * (1.0 + 1e-12) + 1e-12);
    Ok((n, rr.max(0.0).min(top)))
}

/// Prefix sums of Φ, Φ′, Φ″ along base + kα for k in [lo, hi).
#[derive(Clone, Debug)]
pub struct OrbitTable {
    pub base: CirclePoint,
    pub lo: i64,
    pub hi: i64,
    prefix: [Vec<Dd>; 3],
    /// Index in [lo, hi) of the orbit point closest to the singularity.
    pub closest: (i64, u128),
}

impl OrbitTable {
    /// `orders` selects which of Φ, Φ′, Φ″ to tabulate.
    pub fn build(roof: &RoofFunction, ctx: &AlphaContext, base: CirclePoint, lo: i64, hi: i64, orders: [bool; 3]) -> Result<Self> {
        assert!(hi >= lo);
        let len = (hi - lo) as usize;
        let guard = roof.guard_raw();
        let mut prefix: [Vec<Dd>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (o, p) in prefix.iter_mut().enumerate() {
            if orders[o] {
                p.reserve(len + 1);
                p.push(Dd::ZERO);
            }
        }
        let mut y = orbit_point(base, lo, ctx).0;
        let mut closest = (lo, u128::MAX);
        let all = orders[1] || orders[2];
        for k in 0..len {
            let neg = y.wrapping_neg();
            let d = y.min(neg);
            if d < guard {
                return Err(Error::SingularityProximity { distance: d as f64 * INV, index: lo + k as i64 });
            }
            if d < closest.1 {
                closest = (lo + k as i64, d);
            }
            let (dp, dm) = (y as f64 * INV, neg as f64 * INV);
            if all {
                let v = roof.eval3_sides(dp, dm);
                for o in 0..3 {
                    if orders[o] {
                        let last = *prefix[o].last().unwrap();
                        prefix[o].push(last.add_f64(v[o]));
                    }
                }
            } else {
                let last = *prefix[0].last().unwrap();
                prefix[0].push(last.add_f64(roof.eval_sides(dp, dm, 0)));
            }
            y = y.wrapping_add(ctx.alpha);
        }
        Ok(OrbitTable { base, lo, hi, prefix, closest })
    }

    #[inline]
    pub fn prefix(&self, order: u8, k: i64) -> Dd {
        self.prefix[order as usize][(k - self.lo) as usize]
    }

    /// Σ_{k ∈ [from, to)} f(base + kα).
    #[inline]
    pub fn window(&self, order: u8, from: i64, to: i64) -> Dd {
        self.prefix(order, to).sub(self.prefix(order, from))
    }

    /// S_N f at the point base + jα, with the negative-time convention.
    #[inline]
    pub fn sum_at(&self, order: u8, j: i64, n: i64) -> f64 {
        if n >= 0 {
            self.window(order, j, j + n).to_f64()
        } else {
            -self.window(order, j + n, j).to_f64()
        }
    }

    /// Single term f(base + kα).
    #[inline]
    pub fn term(&self, order: u8, k: i64) -> f64 {
        self.window(order, k, k + 1).to_f64()
    }

    pub fn covers(&self, from: i64, to: i64) -> bool {
        from >= self.lo && to <= self.hi
    }

    /// Hitting count for the point base + jα at height r after time t:
    /// the largest k with P(k) ≤ P(j) + r + t, N = k − j.
    pub fn hitting(&self, j: i64, r: f64, t: f64) -> Option<(i64, f64)> {
        let target = self.prefix(0, j).add_f64(r + t);
        let le = |k: i64| target.sub(self.prefix(0, k)).to_f64() >= 0.0;
        let (mut lo, mut hi) = (self.lo, self.hi);
        if !le(lo) {
            return None;
        }
        if le(hi) {
            return None; // crossing beyond the table
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if le(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some((lo - j, target.sub(self.prefix(0, lo)).to_f64()))
    }
}

/// κ(t): monotone, positive, slowly decaying to 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum Kappa {
    /// 1 / log log(t + e^e).
    #[default]
    LogLog,
    Constant(f64),
}

impl Kappa {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Kappa::LogLog => {
                let ee = math::exp(core::f64::consts::E);
                1.0 / math::ln(math::ln(t + ee))
            }
            Kappa::Constant(k) => k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EsEstimate {
    ES0,
    ES1,
    ES2,
    ES3,
    ES4,
}

impl EsEstimate {
    pub const ALL: [EsEstimate; 5] = [EsEstimate::ES0, EsEstimate::ES1, EsEstimate::ES2, EsEstimate::ES3, EsEstimate::ES4];

    fn index(self) -> u64 {
        self as u64
    }

    /// Names of the fitted constants, and whether each is a lower (min) fit
    /// that must stay positive.
    pub fn constants(self) -> &'static [(&'static str, bool)] {
        match self {
            EsEstimate::ES0 => &[("C_sum_deficit", false), ("C_hitting_excess", false)],
            EsEstimate::ES1 => &[("c_lower", true), ("C_upper", false)],
            EsEstimate::ES2 => &[("c_lower", true), ("C_upper", false)],
            EsEstimate::ES3 => &[("C", false)],
            EsEstimate::ES4 => &[("C", false), ("C_log_squared", false)],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EsConfig {
    pub suite: Vec<EsEstimate>,
    pub n_lo: usize,
    pub n_hi: usize,
    pub samples: usize,
    /// Allowed relative change of a fitted constant between half and full sample sets.
    pub slack: f64,
    pub seed: u64,
    /// Distances to the singularity are log-uniform in [min_distance, 1/2].
    pub min_distance: f64,
    pub kappa: Kappa,
}

impl Default for EsConfig {
    fn default() -> Self {
        EsConfig {
            suite: EsEstimate::ALL.to_vec(),
            n_lo: 3,
            n_hi: 18,
            samples: 1000,
            slack: 0.2,
            seed: 1,
            min_distance: 1e-12,
            kappa: Kappa::LogLog,
        }
    }
}

/// Where a ratio was observed; enough to replay the sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsWitness {
    pub x: CirclePoint,
    pub n: usize,
    pub big_n: i64,
    pub ratio: f64,
}

/// Per-sample ratios, one per fitted constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsSample {
    pub ratios: Vec<f64>,
    pub witness: EsWitness,
    /// ES0 only: whether S_N ≥ (1 − κ(N))N held.
    pub kappa_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FittedConstant {
    pub name: String,
    pub value: f64,
    pub value_half: f64,
    pub relative_change: f64,
    pub stable: bool,
    pub witness: EsWitness,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EsRecord {
    pub estimate: EsEstimate,
    pub n_range: (usize, usize),
    pub samples: usize,
    pub constants: Vec<FittedConstant>,
    pub worst_ratio: f64,
    /// ES0: fraction of samples with S_N ≥ (1 − κ(N))N.
    pub kappa_fraction: Option<f64>,
    pub skipped: Option<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EsReport {
    pub records: Vec<EsRecord>,
    pub pass: bool,
}

fn sample_point(rng: &mut rng::Rng, min_distance: f64) -> CirclePoint {
    let lo = math::ln(min_distance);
    let hi = math::ln(0.5);
    let d = math::exp(rng::uniform_range(rng, lo, hi));
    let raw = (d * TWO_128) as u128;
    if rng::uniform(rng) < 0.5 {
        CirclePoint(raw)
    } else {
        CirclePoint(raw.wrapping_neg())
    }
}

fn term_at(roof: &RoofFunction, p: CirclePoint, order: u8) -> f64 {
    let (dp, dm) = p.side_distances();
    roof.eval_sides(dp, dm, order)
}

/// S_NΦ^{(k)}(x) without the term at index `skip` (0 ≤ skip < N), summed
/// directly: subtracting a term near the singularity would cancel the rest.
fn sum_skipping(roof: &RoofFunction, sel: Selector, x: CirclePoint, n: i64, skip: i64, ctx: &AlphaContext) -> Result<f64> {
    let head = birkhoff_sum(roof, sel, x, skip, ctx)?.value;
    let tail = birkhoff_sum(roof, sel, orbit_point(x, skip + 1, ctx), n - skip - 1, ctx)?.value;
    Ok(head + tail)
}

/// One ES sample, drawn from its own substream. `Ok(None)` means the sample
/// grazed the guard and is skipped.
pub fn es_sample(roof: &RoofFunction, ctx: &AlphaContext, est: EsEstimate, index: usize, cfg: &EsConfig) -> Result<Option<EsSample>> {
    let mut r = rng::stream(cfg.seed, rng::tag::ES, (est.index() << 40) | index as u64);
    let x = sample_point(&mut r, cfg.min_distance);
    let n = rng::uniform_int(&mut r, cfg.n_lo as u64, cfg.n_hi as u64) as usize;
    if n + 1 >= ctx.q.len() {
        return Err(Error::OutOfTable { value: n as f64, limit: *ctx.q.last().unwrap() });
    }
    let g = roof.v_exponent();
    let (qn, qn1) = (ctx.q[n] as u64, ctx.q[n + 1] as u64);
    let (qf, qf1) = (qn as f64, qn1 as f64);
    let sum = |sel: Selector, big_n: i64| birkhoff_sum(roof, sel, x, big_n, ctx);
    let wit = |big_n: i64| EsWitness { x, n, big_n, ratio: 0.0 };
    macro_rules! tryg {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(Error::SingularityProximity { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        };
    }
    let out = match est {
        EsEstimate::ES0 => {
            let big_n = rng::uniform_int(&mut r, qn, qn1) as i64;
            let s = tryg!(sum(Selector::Phi, big_n)).value;
            let nf = big_n as f64;
            let deficit = (nf - s) / math::pow(nf, g);
            let t = rng::uniform_range(&mut r, qf, qf1);
            let (hn, _) = tryg!(hitting_count(roof, ctx, x, 0.0, t));
            let excess = (hn as f64 - t) / math::pow(t, g);
            let kappa_ok = s >= (1.0 - cfg.kappa.eval(nf)) * nf;
            EsSample { ratios: alloc::vec![deficit, excess], witness: wit(big_n), kappa_ok: Some(kappa_ok) }
        }
        EsEstimate::ES1 => {
            let big_n = rng::uniform_int(&mut r, qn, qn1) as i64;
            let s = tryg!(sum(Selector::Phi2, big_n)).value;
            let m = orbit_min_distance(x, big_n as u64, ctx);
            let rest = tryg!(sum_skipping(roof, Selector::Phi2, x, big_n, m.index as i64, ctx));
            let lower = s / math::pow(qf, 2.0 + g);
            let upper = rest / math::pow(qf1, 2.0 + g);
            EsSample { ratios: alloc::vec![lower, upper], witness: wit(big_n), kappa_ok: None }
        }
        EsEstimate::ES2 => {
            let m = orbit_min_distance(x, qn, ctx);
            let rest = tryg!(sum_skipping(roof, Selector::Phi2, x, qn as i64, m.index as i64, ctx));
            let v = rest.abs() / math::pow(qf, 2.0 + g);
            EsSample { ratios: alloc::vec![v, v], witness: wit(qn as i64), kappa_ok: None }
        }
        EsEstimate::ES3 => {
            let mag = rng::uniform_int(&mut r, qn, qn1) as i64;
            let big_n = if rng::uniform(&mut r) < 0.5 { mag } else { -mag };
            let s = tryg!(sum(Selector::Phi1, big_n)).value;
            // closest approach over the q_{n+1} points on the summed side
            let start = if big_n > 0 { x } else { orbit_point(x, -(qn1 as i64), ctx) };
            let m = orbit_min_distance(start, qn1, ctx);
            let near = term_at(roof, orbit_point(start, m.index as i64, ctx), 1).abs();
            let v = s.abs() / (math::pow(qf1, 1.0 + g) + near);
            EsSample { ratios: alloc::vec![v], witness: wit(big_n), kappa_ok: None }
        }
        EsEstimate::ES4 => {
            let s = tryg!(sum(Selector::Phi, qn as i64)).value;
            let m = orbit_min_distance(x, qn, ctx);
            let near = term_at(roof, orbit_point(x, m.index as i64, ctx), 0);
            let first = ((s - qf).abs() - near) / math::pow(qf, g);
            let big_m = rng::uniform_int(&mut r, qn, qn1) as i64;
            let sm = tryg!(sum(Selector::Phi, big_m)).value;
            let mf = big_m as f64;
            let mm = orbit_min_distance(x, big_m as u64, ctx);
            let near_m = term_at(roof, orbit_point(x, mm.index as i64, ctx), 0);
            let lm = math::ln(mf);
            let l2 = (lm * lm).max(1.0);
            let second = ((sm - mf).abs() / l2 - near_m) / math::pow(mf, g);
            EsSample { ratios: alloc::vec![first, second], witness: wit(big_m), kappa_ok: None }
        }
    };
    Ok(Some(out))
}

/// Fold samples (in index order) into a record.
pub fn es_record(est: EsEstimate, cfg: &EsConfig, samples: &[Option<EsSample>]) -> EsRecord {
    let kept: Vec<&EsSample> = samples.iter().flatten().collect();
    let half: Vec<&EsSample> = samples[..samples.len() / 2].iter().flatten().collect();
    let mut constants = Vec::new();
    let mut pass = !kept.is_empty();
    let mut worst_ratio: f64 = 0.0;
    for (ci, &(name, lower)) in est.constants().iter().enumerate() {
        let fit = |set: &[&EsSample]| -> (f64, Option<EsWitness>) {
            let mut best: Option<(f64, EsWitness)> = None;
            for s in set {
                let v = s.ratios[ci];
                let better = match best {
                    None => true,
                    Some((b, _)) => (lower && v < b) || (!lower && v > b),
                };
                if better {
                    best = Some((v, EsWitness { ratio: v, ..s.witness }));
                }
            }
            match best {
                Some((v, w)) => (v, Some(w)),
                None => (f64::NAN, None),
            }
        };
        let (value, witness) = fit(&kept);
        let (value_half, _) = fit(&half);
        let scale = value.abs().max(value_half.abs()).max(1e-6);
        let relative_change = (value - value_half).abs() / scale;
        let finite = value.is_finite() && value_half.is_finite();
        let stable = finite && relative_change < cfg.slack && (!lower || value > 0.0);
        pass &= stable;
        worst_ratio = worst_ratio.max(value.abs());
        constants.push(FittedConstant {
            name: name.into(),
            value,
            value_half,
            relative_change,
            stable,
            witness: witness.unwrap_or(EsWitness { x: CirclePoint::ZERO, n: 0, big_n: 0, ratio: f64::NAN }),
        });
    }
    let kappa_fraction = if est == EsEstimate::ES0 && !kept.is_empty() {
        Some(kept.iter().filter(|s| s.kappa_ok == Some(true)).count() as f64 / kept.len() as f64)
    } else {
        None
    };
    EsRecord {
        estimate: est,
        n_range: (cfg.n_lo, cfg.n_hi),
        samples: kept.len(),
        constants,
        worst_ratio,
        kappa_fraction,
        skipped: None,
        pass,
    }
}

fn skipped(est: EsEstimate, cfg: &EsConfig, why: &str) -> EsRecord {
    EsRecord {
        estimate: est,
        n_range: (cfg.n_lo, cfg.n_hi),
        samples: 0,
        constants: Vec::new(),
        worst_ratio: 0.0,
        kappa_fraction: None,
        skipped: Some(why.into()),
        pass: true,
    }
}

/// Reason an estimate does not apply to this roof, if any.
pub fn es_inapplicable(roof: &RoofFunction, est: EsEstimate) -> Option<&'static str> {
    if roof.is_constant() && matches!(est, EsEstimate::ES1 | EsEstimate::ES2 | EsEstimate::ES3) {
        return Some("degenerate roof: derivative sums vanish, the lower bounds need A > 0");
    }
    None
}

pub fn verify_es(roof: &RoofFunction, ctx: &AlphaContext, cfg: &EsConfig) -> Result<EsReport> {
    verify_es_with(&crate::exec::Sequential, roof, ctx, cfg)
}

/// Samples are independent substreams, so the report does not depend on the executor.
pub fn verify_es_with<E: crate::exec::Executor>(exec: &E, roof: &RoofFunction, ctx: &AlphaContext, cfg: &EsConfig) -> Result<EsReport> {
    check_es_preconditions(roof, ctx, cfg)?;
    let mut records = Vec::new();
    for &est in &cfg.suite {
        if let Some(why) = es_inapplicable(roof, est) {
            records.push(skipped(est, cfg, why));
            continue;
        }
        let samples: Vec<Option<EsSample>> = exec.map(cfg.samples, |i| es_sample(roof, ctx, est, i, cfg)).into_iter().collect::<Result<_>>()?;
        records.push(es_record(est, cfg, &samples));
    }
    let pass = records.iter().all(|r| r.pass);
    Ok(EsReport { records, pass })
}

pub fn check_es_preconditions(roof: &RoofFunction, ctx: &AlphaContext, cfg: &EsConfig) -> Result<()> {
    if cfg.n_lo < 1 || cfg.n_hi < cfg.n_lo || cfg.n_hi + 2 > ctx.q.len() {
        return Err(crate::error::invalid("n_range", "must satisfy 1 <= n_lo <= n_hi < n_max"));
    }
    let needs_mean = cfg.suite.iter().any(|e| matches!(e, EsEstimate::ES0 | EsEstimate::ES4));
    if needs_mean && (roof.mean()? - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition("ES0/ES4 need a roof normalised to mean 1".into()));
    }
    if cfg.samples < 2 {
        return Err(Error::InsufficientSamples { got: cfg.samples, need: 2 });
    }
    Ok(())
}
