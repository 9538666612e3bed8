//! Correlation estimates on the suspension, polynomial decay fits, L² decay
//! of ergodic averages, and the Van der Corput inequality.
//!
//! Correlations use a block engine: each block draws one base point, builds a
//! prefix table of Φ along its orbit, and uses the first `block_len` orbit
//! points as samples. Every orbit point is marginally uniform, so the block
//! average is unbiased; standard errors are computed from block means, which
//! accounts for the correlation inside a block.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::arithmetic::{orbit_point, AlphaContext, CirclePoint};
use crate::birkhoff::OrbitTable;
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::flow::{sample_point, FlowPoint, Observable, SamplerConfig, Scheme, SupportBox};
use crate::math;
use crate::rng;
use crate::roof::RoofFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub times: Vec<f64>,
    pub k: usize,
    /// ∫ ∏ φ_i ∘ f_{t_i} dμ − ∏ μ(φ_i).
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub dropped_fraction: f64,
    pub seed: u64,
    /// Set when the drop rate reaches 1%.
    pub flagged: bool,
    pub product_mean: f64,
    pub mean_product: f64,
}

/// Unique (observable, time) evaluations shared by several product queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    /// Observable whose support box is sampled; every query evaluates it at time 0.
    pub restrict: usize,
    pub factors: Vec<(usize, f64)>,
    pub queries: Vec<Vec<usize>>,
}

impl BlockPlan {
    pub fn new(restrict: usize) -> Self {
        BlockPlan { restrict, factors: Vec::new(), queries: Vec::new() }
    }

    fn factor(&mut self, obs: usize, t: f64) -> usize {
        if let Some(i) = self.factors.iter().position(|&(o, s)| o == obs && s == t) {
            return i;
        }
        self.factors.push((obs, t));
        self.factors.len() - 1
    }

    /// Adds the product ∏ φ_{obs}(f_t p) and returns its query index.
    pub fn push_query(&mut self, factors: &[(usize, f64)]) -> usize {
        let q = factors.iter().map(|&(o, t)| self.factor(o, t)).collect();
        self.queries.push(q);
        self.queries.len() - 1
    }

    fn t_max(&self) -> f64 {
        self.factors.iter().map(|f| f.1).fold(0.0, f64::max)
    }

    pub fn validate(&self, observables: &[Observable]) -> Result<SupportBox> {
        let b = observables
            .get(self.restrict)
            .and_then(|o| o.support())
            .ok_or_else(|| invalid("observables", "the sampled observable needs a bounded support"))?;
        for q in &self.queries {
            if !q.iter().any(|&f| self.factors[f] == (self.restrict, 0.0)) {
                return Err(Error::Precondition("every product must contain the sampled observable at time 0".into()));
            }
        }
        if self.factors.iter().any(|f| f.1 < 0.0 || !f.1.is_finite()) {
            return Err(invalid("times", "must be finite and non-negative"));
        }
        Ok(b)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    /// Block average of each query (zero when the block was dropped).
    pub means: Vec<f64>,
    pub points: usize,
    pub dropped: usize,
}

/// 10-point Gauss–Legendre nodes and weights on [−1, 1].
const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// r ↦ φ(f_{t+r}(x_j, 0)) on [r_lo, r_hi] as a list of fiber pieces
/// (start of the piece in r, orbit offset k, time offset S_k Φ(x_j)).
struct FactorPieces {
    pieces: Vec<(f64, i64, f64)>,
    /// Interior breakpoints in r: fiber changes and support edges.
    cuts: Vec<f64>,
}

fn factor_pieces(
    table: &OrbitTable,
    ctx: &AlphaContext,
    xj: CirclePoint,
    j: i64,
    obs: &Observable,
    t: f64,
    r_lo: f64,
    r_hi: f64,
) -> Option<FactorPieces> {
    let (mut k, _) = table.hitting(j, 0.0, t + r_lo)?;
    let mut pieces = Vec::new();
    let mut cuts = Vec::new();
    let mut start = r_lo;
    loop {
        let off = table.window(0, j, j + k).to_f64();
        pieces.push((start, k, off));
        if let Some(sb) = obs.support() {
            if sb.contains_x(orbit_point(xj, k, ctx)) {
                for edge in [sb.r_lo, sb.r_hi] {
                    let r = edge - t + off;
                    if r > start && r < r_hi {
                        cuts.push(r);
                    }
                }
            }
        }
        if j + k + 1 >= table.hi {
            return None;
        }
        let next = table.window(0, j, j + k + 1).to_f64() - t;
        if next >= r_hi {
            break;
        }
        cuts.push(next);
        start = next;
        k += 1;
    }
    Some(FactorPieces { pieces, cuts })
}

impl FactorPieces {
    #[inline]
    fn eval(&self, ctx: &AlphaContext, xj: CirclePoint, obs: &Observable, t: f64, r: f64) -> f64 {
        let i = self.pieces.iter().rposition(|p| p.0 <= r).unwrap_or(0);
        let (_, k, off) = self.pieces[i];
        let p = FlowPoint { x: orbit_point(xj, k, ctx), r: (t + r - off).max(0.0) };
        obs.eval(p)
    }
}

/// One block of the engine. `stream` separates independent passes.
///
/// For each base point x_j in the sampled x-range the height r is integrated
/// out exactly: along a fiber every factor is a polynomial in r between
/// fiber changes and support edges, so Gauss–Legendre on each piece is exact
/// for products of up to three bumps.
pub fn run_block(
    roof: &RoofFunction,
    ctx: &AlphaContext,
    observables: &[Observable],
    plan: &BlockPlan,
    cfg: &SamplerConfig,
    stream: u64,
    b: usize,
) -> Result<BlockStats> {
    let sbox = plan.validate(observables)?;
    let mean_phi = roof.mean()?;
    let len = cfg.block_len.max(1);
    let mut rng_b = rng::stream(cfg.seed, rng::tag::BLOCK, (stream << 40) | b as u64);
    let x = CirclePoint(rng::uniform_u128(&mut rng_b));
    let (r_lo, r_hi) = (sbox.r_lo, sbox.r_hi);
    let t_max = plan.t_max();
    let mut margin = (1.3 * (t_max + r_hi) / mean_phi) as i64 + 64;
    let nq = plan.queries.len();
    'attempt: for _ in 0..6 {
        let table = match OrbitTable::build(roof, ctx, x, 0, len as i64 + margin, [true, false, false]) {
            Ok(t) => t,
            Err(Error::SingularityProximity { .. }) => {
                return Ok(BlockStats { means: alloc::vec![0.0; nq], points: 0, dropped: len });
            }
            Err(e) => return Err(e),
        };
        let mut sums = alloc::vec![0.0; nq];
        let mut pieces: Vec<Option<FactorPieces>> = Vec::with_capacity(plan.factors.len());
        let mut cuts: Vec<f64> = Vec::new();
        for j in 0..len as i64 {
            let xj = orbit_point(x, j, ctx);
            if !sbox.contains_x(xj) {
                continue;
            }
            pieces.clear();
            for &(o, t) in &plan.factors {
                match factor_pieces(&table, ctx, xj, j, &observables[o], t, r_lo, r_hi) {
                    Some(p) => pieces.push(Some(p)),
                    None => {
                        margin *= 2;
                        continue 'attempt;
                    }
                }
            }
            for (qi, q) in plan.queries.iter().enumerate() {
                cuts.clear();
                cuts.push(r_lo);
                for &f in q {
                    cuts.extend_from_slice(&pieces[f].as_ref().unwrap().cuts);
                }
                cuts.push(r_hi);
                cuts.sort_by(f64::total_cmp);
                let mut integral = 0.0;
                for w in cuts.windows(2) {
                    let (a, c) = (w[0], w[1]);
                    if !(c > a) {
                        continue;
                    }
                    let (mid, half) = (0.5 * (a + c), 0.5 * (c - a));
                    let mut acc = 0.0;
                    for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
                        for r in [mid - half * node, mid + half * node] {
                            let mut v = 1.0;
                            for &f in q {
                                let (o, t) = plan.factors[f];
                                v *= pieces[f].as_ref().unwrap().eval(ctx, xj, &observables[o], t, r);
                                if v == 0.0 {
                                    break;
                                }
                            }
                            acc += weight * v;
                        }
                    }
                    integral += half * acc;
                }
                sums[qi] += integral / mean_phi;
            }
        }
        let means = sums.into_iter().map(|s| s / len as f64).collect();
        return Ok(BlockStats { means, points: len, dropped: 0 });
    }
    Ok(BlockStats { means: alloc::vec![0.0; nq], points: 0, dropped: len })
}

/// Per-query (mean, stderr) over kept blocks, plus the drop fraction.
pub fn fold_blocks(blocks: &[BlockStats], nq: usize) -> (Vec<(f64, f64)>, usize, f64) {
    let kept: Vec<&BlockStats> = blocks.iter().filter(|b| b.dropped == 0).collect();
    let points: usize = blocks.iter().map(|b| b.points + b.dropped).sum();
    let dropped: usize = blocks.iter().map(|b| b.dropped).sum();
    let out = (0..nq)
        .map(|q| {
            let (m, se, _) = crate::flow::weighted_mean(kept.iter().map(|b| b.means[q]));
            (m, se)
        })
        .collect();
    (out, points, if points == 0 { 1.0 } else { dropped as f64 / points as f64 })
}

pub fn run_plan<E: Executor>(
    exec: &E,
    roof: &RoofFunction,
    ctx: &AlphaContext,
    observables: &[Observable],
    plan: &BlockPlan,
    cfg: &SamplerConfig,
    stream: u64,
) -> Result<(Vec<(f64, f64)>, usize, f64)> {
    plan.validate(observables)?;
    let nb = cfg.n_samples.div_ceil(cfg.block_len.max(1)).max(2);
    let blocks: Vec<BlockStats> = exec
        .map(nb, |b| run_block(roof, ctx, observables, plan, cfg, stream, b))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(fold_blocks(&blocks, plan.queries.len()))
}

fn check_inputs(roof: &RoofFunction, observables: &[Observable], tuples: &[Vec<f64>]) -> Result<()> {
    if observables.is_empty() {
        return Err(invalid("k", "need at least one observable"));
    }
    for o in observables {
        o.validate(roof)?;
    }
    for t in tuples {
        if t.len() != observables.len() {
            return Err(invalid("times", "need one time per observable"));
        }
        if t[0] != 0.0 || t.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("times", "must start at 0 and be non-decreasing"));
        }
    }
    Ok(())
}

/// ∫ ∏ φ_i ∘ f_{t_i} − ∏ μ(φ_i) for each time tuple, all on one sample stream.
pub fn correlate_many<E: Executor>(
    exec: &E,
    roof: &RoofFunction,
    ctx: &AlphaContext,
    observables: &[Observable],
    tuples: &[Vec<f64>],
    cfg: &SamplerConfig,
) -> Result<Vec<CorrelationEstimate>> {
    check_inputs(roof, observables, tuples)?;
    let k = observables.len();
    let mut mean_product = 1.0;
    for o in observables {
        mean_product *= o.mean(roof)?;
    }
    let constant: f64 = observables.iter().filter_map(|o| o.constant_value()).product();
    let first = observables.iter().position(|o| o.constant_value().is_none());
    let seed = cfg.seed;
    let Some(first) = first else {
        // all factors constant: the product is exactly the product of means
        return Ok(tuples
            .iter()
            .map(|t| CorrelationEstimate {
                times: t.clone(),
                k,
                estimate: 0.0,
                stderr: 0.0,
                n_samples: 0,
                dropped_fraction: 0.0,
                seed,
                flagged: false,
                product_mean: mean_product,
                mean_product,
            })
            .collect());
    };
    let mut plan = BlockPlan::new(first);
    let mut ids = Vec::new();
    for t in tuples {
        let shift = t[first];
        let fs: Vec<(usize, f64)> = (0..k).filter(|&i| observables[i].constant_value().is_none()).map(|i| (i, t[i] - shift)).collect();
        ids.push(plan.push_query(&fs));
    }
    let (res, points, dropped) = run_plan(exec, roof, ctx, observables, &plan, cfg, 0)?;
    Ok(tuples
        .iter()
        .zip(ids)
        .map(|(t, q)| {
            let (m, se) = res[q];
            let pm = constant * m;
            CorrelationEstimate {
                times: t.clone(),
                k,
                estimate: pm - mean_product,
                stderr: constant.abs() * se,
                n_samples: points,
                dropped_fraction: dropped,
                seed,
                flagged: dropped >= 0.01,
                product_mean: pm,
                mean_product,
            }
        })
        .collect())
}

pub fn correlate<E: Executor>(
    exec: &E,
    roof: &RoofFunction,
    ctx: &AlphaContext,
    observables: &[Observable],
    times: &[f64],
    cfg: &SamplerConfig,
) -> Result<CorrelationEstimate> {
    Ok(correlate_many(exec, roof, ctx, observables, &[times.to_vec()], cfg)?.remove(0))
}

/// Times (0, t, 2t, …, (k−1)t) for each t of the grid.
pub fn equally_spaced(k: usize, grid: &[f64]) -> Vec<Vec<f64>> {
    grid.iter().map(|&t| (0..k).map(|i| i as f64 * t).collect()).collect()
}

/// t₀, t₀·f, t₀·f², … up to t₁ (inclusive within rounding).
pub fn geometric_grid(t0: f64, t1: f64, factor: f64) -> Result<Vec<f64>> {
    if !(t0 > 0.0 && t1 >= t0 && factor > 1.0) {
        return Err(invalid("grid", "need 0 < t0 <= t1 and factor > 1"));
    }
    let mut g = Vec::new();
    let mut t = t0;
    while t <= t1 * (1.0 + 1e-12) {
        g.push(t);
        t *= factor;
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub times: Vec<f64>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// −slope of log|estimate| against log t over the usable points.
    pub eta: f64,
    pub intercept: f64,
    /// RMS residual in log space.
    pub residual: f64,
    /// Approximate 95% interval for η.
    pub ci: (f64, f64),
    pub usable: usize,
}

/// Two-sided 97.5% Student quantiles for small degrees of freedom.
fn t_quantile(df: usize) -> f64 {
    const T: [f64; 10] = [12.71, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];
    match df {
        0 => f64::INFINITY,
        1..=10 => T[df - 1],
        11..=20 => 2.13,
        21..=40 => 2.04,
        _ => 1.96,
    }
}

/// Least-squares fit of log|y| = a − η log t on points with |y| > 3·stderr.
pub fn decay_fit(series: &[(f64, f64, f64)]) -> Result<DecayFit> {
    let usable: Vec<(f64, f64)> = series
        .iter()
        .filter(|&&(t, y, se)| t > 0.0 && y.is_finite() && y.abs() > 3.0 * se)
        .map(|&(t, y, _)| (math::ln(t), math::ln(y.abs())))
        .collect();
    let n = usable.len();
    let span = if n > 0 {
        let lo = usable.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = usable.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / core::f64::consts::LN_10
    } else {
        0.0
    };
    if n < 5 || span < 2.0 - 1e-9 {
        return Err(Error::InsufficientPoints { usable: n });
    }
    let nf = n as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi_2()).sum();
    let se = math::sqrt(rss / (nf - 2.0) / sxx);
    let h = t_quantile(n - 2) * se;
    Ok(DecayFit {
        times: series.iter().map(|s| s.0).collect(),
        estimates: series.iter().map(|s| s.1).collect(),
        stderrs: series.iter().map(|s| s.2).collect(),
        eta: -slope,
        intercept,
        residual: math::sqrt(rss / nf),
        ci: (-slope - h, -slope + h),
        usable: n,
    })
}

trait Sq {
    fn powi_2(self) -> f64;
}

impl Sq for f64 {
    fn powi_2(self) -> f64 {
        self * self
    }
}

pub fn fit_estimates(estimates: &[CorrelationEstimate], time_index: usize) -> Result<DecayFit> {
    let s: Vec<(f64, f64, f64)> = estimates.iter().map(|e| (e.times[time_index.min(e.times.len() - 1)], e.estimate, e.stderr)).collect();
    decay_fit(&s)
}

/// Non-decaying oscillation: the sign changes along the series and the late
/// half keeps at least half the early half's amplitude.
pub fn oscillation_flag(estimates: &[f64]) -> bool {
    if estimates.len() < 4 {
        return false;
    }
    let changes = estimates.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    let h = estimates.len() / 2;
    let early = estimates[..h].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let late = estimates[h..].iter().map(|v| v.abs()).fold(0.0, f64::max);
    changes > 0 && late >= 0.5 * early
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2Point {
    pub t: f64,
    pub norm: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2Decay {
    pub points: Vec<L2Point>,
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    pub dropped_fraction: f64,
}

/// ((1/T)∫₀ᵀ φ∘f_s(p) ds − μ(φ))² for each T of the grid, for sample `i`.
/// The time integral is exact: φ is integrated in closed form along each fiber.
pub fn l2_sample(
    roof: &RoofFunction,
    ctx: &AlphaContext,
    obs: &Observable,
    mu: f64,
    grid: &[f64],
    cfg: &SamplerConfig,
    i: usize,
) -> Option<Vec<f64>> {
    let (p, _) = sample_point(roof, Scheme::FiberUniform, cfg.seed, 1, i);
    let mut out = Vec::with_capacity(grid.len());
    let mut gi = 0;
    let mut acc = 0.0;
    let mut elapsed = 0.0;
    let mut x = p.x;
    let mut a = p.r;
    let guard = roof.guard_raw();
    while gi < grid.len() {
        if x.dist_raw() < guard {
            return None;
        }
        let h = roof.eval(x, 0).ok()?;
        let dur = h - a;
        while gi < grid.len() && grid[gi] <= elapsed + dur {
            let part = obs.fiber_integral(x, a, a + (grid[gi] - elapsed));
            let avg = (acc + part) / grid[gi];
            out.push((avg - mu) * (avg - mu));
            gi += 1;
        }
        acc += obs.fiber_integral(x, a, h);
        elapsed += dur;
        x = orbit_point(x, 1, ctx);
        a = 0.0;
    }
    Some(out)
}

/// L² norm of the centred ergodic average for each T, then a decay fit.
pub fn l2_average_decay<E: Executor>(
    exec: &E,
    roof: &RoofFunction,
    ctx: &AlphaContext,
    obs: &Observable,
    grid: &[f64],
    cfg: &SamplerConfig,
) -> Result<L2Decay> {
    obs.validate(roof)?;
    let mu = obs.mean(roof)?;
    if grid.iter().any(|&t| !(t > 0.0)) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("grid", "times must be positive and increasing"));
    }
    let samples = exec.map(cfg.n_samples, |i| l2_sample(roof, ctx, obs, mu, grid, cfg, i));
    let kept: Vec<&Vec<f64>> = samples.iter().flatten().collect();
    let dropped_fraction = 1.0 - kept.len() as f64 / samples.len().max(1) as f64;
    let points: Vec<L2Point> = grid
        .iter()
        .enumerate()
        .map(|(g, &t)| {
            let (m, se, _) = crate::flow::weighted_mean(kept.iter().map(|v| v[g]));
            let norm = math::sqrt(m.max(0.0));
            let stderr = if norm > 0.0 { se / (2.0 * norm) } else { math::sqrt(se) };
            L2Point { t, norm, stderr }
        })
        .collect();
    let series: Vec<(f64, f64, f64)> = points.iter().map(|p| (p.t, p.norm, p.stderr)).collect();
    let (fit, fit_error) = match decay_fit(&series) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(alloc::format!("{e}"))),
    };
    Ok(L2Decay { points, fit, fit_error, dropped_fraction })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdcOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Both sides of the Van der Corput inequality for φ_1..φ_N (0-based here).
pub fn vdc_check(vectors: &[Vec<f64>], k: usize, l: usize, a: f64) -> Result<VdcOutcome> {
    let n = vectors.len();
    if !(1 <= l && l <= k && k + l <= n) {
        return Err(Error::Precondition(alloc::format!("need 1 <= L <= K and K + L <= N (L={l}, K={k}, N={n})")));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(invalid("vectors", "dimensions differ"));
    }
    if vectors.iter().any(|v| math::sqrt(dot(v, v)) > a * (1.0 + 1e-12)) {
        return Err(Error::Precondition("some ||phi_n|| exceeds A".into()));
    }
    let mut avg = alloc::vec![0.0; dim];
    for v in &vectors[..k] {
        for (s, x) in avg.iter_mut().zip(v) {
            *s += x / k as f64;
        }
    }
    let lhs = math::sqrt(dot(&avg, &avg));
    let mut inner = 0.0;
    for nn in 0..k {
        let mut row = 0.0;
        for ll in 0..l {
            row += dot(&vectors[nn], &vectors[nn + ll]).abs();
        }
        inner += row / l as f64;
    }
    let rhs = math::sqrt(2.0 * inner / k as f64) + 4.0 * a * math::sqrt(l as f64 / k as f64);
    Ok(VdcOutcome { lhs, rhs, holds: lhs <= rhs })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VdcSuite {
    pub trials: usize,
    pub failures: usize,
    pub worst_margin: f64,
    pub pass: bool,
}

/// One randomized instance: dimension 2–64, mixed unit / scaled / repeated vectors.
pub fn vdc_trial(seed: u64, i: usize) -> Result<VdcOutcome> {
    let mut r = rng::stream(seed, rng::tag::LEMMA, i as u64);
    let dim = rng::uniform_int(&mut r, 2, 64) as usize;
    let n = rng::uniform_int(&mut r, 4, 200) as usize;
    let k = rng::uniform_int(&mut r, 1, (n - 1) as u64) as usize;
    let l = rng::uniform_int(&mut r, 1, k.min(n - k) as u64) as usize;
    let a = rng::uniform_range(&mut r, 0.1, 10.0);
    let style = rng::uniform_int(&mut r, 0, 2);
    let base: Vec<f64> = (0..dim).map(|_| rng::normal(&mut r)).collect();
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut v: Vec<f64> = match style {
                0 => (0..dim).map(|_| rng::normal(&mut r)).collect(),
                1 => base.iter().map(|b| b + 0.3 * rng::normal(&mut r)).collect(),
                _ => base.clone(),
            };
            let norm = math::sqrt(dot(&v, &v)).max(1e-300);
            let scale = a * rng::uniform(&mut r) / norm;
            v.iter_mut().for_each(|x| *x *= scale);
            v
        })
        .collect();
    vdc_check(&vectors, k, l, a)
}

pub fn vdc_suite<E: Executor>(exec: &E, seed: u64, trials: usize) -> Result<VdcSuite> {
    let out: Vec<VdcOutcome> = exec.map(trials, |i| vdc_trial(seed, i)).into_iter().collect::<Result<_>>()?;
    let failures = out.iter().filter(|o| !o.holds).count();
    let worst_margin = out.iter().map(|o| o.rhs - o.lhs).fold(f64::INFINITY, f64::min);
    Ok(VdcSuite { trials, failures, worst_margin, pass: failures == 0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub shifts: Vec<f64>,
    /// ∫ ∏ (φ_i · φ_i∘f_{r_i})∘f_{t_i} − ∏ ∫ φ_i · φ_i∘f_{r_i}.
    pub estimate: CorrelationEstimate,
}

/// Shifted-product correlations over a list of shift vectors (r_i).
pub fn gus_window_scan<E: Executor>(
    exec: &E,
    roof: &RoofFunction,
    ctx: &AlphaContext,
    observables: &[Observable],
    base_times: &[f64],
    shifts: &[Vec<f64>],
    cfg: &SamplerConfig,
) -> Result<Vec<WindowRow>> {
    check_inputs(roof, observables, &[base_times.to_vec()])?;
    let k = observables.len();
    if shifts.iter().any(|s| s.len() != k || s.iter().any(|&r| !(r >= 0.0))) {
        return Err(invalid("shifts", "need k non-negative shifts per row"));
    }
    if observables.iter().all(|o| o.constant_value().is_some()) {
        return Ok(shifts
            .iter()
            .map(|s| WindowRow {
                shifts: s.clone(),
                estimate: CorrelationEstimate {
                    times: base_times.to_vec(),
                    k,
                    estimate: 0.0,
                    stderr: 0.0,
                    n_samples: 0,
                    dropped_fraction: 0.0,
                    seed: cfg.seed,
                    flagged: false,
                    product_mean: observables.iter().map(|o| o.constant_value().unwrap().powi_2()).product(),
                    mean_product: observables.iter().map(|o| o.constant_value().unwrap().powi_2()).product(),
                },
            })
            .collect());
    }
    if observables.iter().any(|o| o.constant_value().is_some()) {
        return Err(invalid("observables", "mix of constant and non-constant observables is not supported here"));
    }
    // joint products, sampled on the support of φ_0
    let mut joint = BlockPlan::new(0);
    let mut joint_ids = Vec::new();
    for s in shifts {
        let fs: Vec<(usize, f64)> = (0..k).flat_map(|i| [(i, base_times[i]), (i, base_times[i] + s[i])]).collect();
        joint_ids.push(joint.push_query(&fs));
    }
    let (jres, points, dropped) = run_plan(exec, roof, ctx, observables, &joint, cfg, 1)?;
    // ∫ φ_i · φ_i∘f_r, each sampled on the support of φ_i
    let mut means: Vec<Vec<(f64, (f64, f64))>> = Vec::new();
    for i in 0..k {
        let mut plan = BlockPlan::new(i);
        let mut rs: Vec<f64> = shifts.iter().map(|s| s[i]).collect();
        rs.sort_by(f64::total_cmp);
        rs.dedup();
        for &r in &rs {
            plan.push_query(&[(i, 0.0), (i, r)]);
        }
        let (res, _, _) = run_plan(exec, roof, ctx, observables, &plan, cfg, 2 + i as u64)?;
        means.push(rs.into_iter().zip(res).collect());
    }
    Ok(shifts
        .iter()
        .zip(joint_ids)
        .map(|(s, q)| {
            let (m, se) = jres[q];
            let ms: Vec<(f64, f64)> = (0..k).map(|i| means[i].iter().find(|e| e.0 == s[i]).unwrap().1).collect();
            let prod: f64 = ms.iter().map(|e| e.0).product();
            let mut var = se * se;
            for i in 0..k {
                let others: f64 = ms.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, e)| e.0).product();
                var += (others * ms[i].1).powi_2();
            }
            WindowRow {
                shifts: s.clone(),
                estimate: CorrelationEstimate {
                    times: base_times.to_vec(),
                    k,
                    estimate: m - prod,
                    stderr: math::sqrt(var),
                    n_samples: points,
                    dropped_fraction: dropped,
                    seed: cfg.seed,
                    flagged: dropped >= 0.01,
                    product_mean: m,
                    mean_product: prod,
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_exact_power() {
        let s: Vec<(f64, f64, f64)> = (0..8).map(|j| {
            let t = 100.0 * 2f64.powi(j);
            (t, libm::pow(t, -0.5), 0.0)
        }).collect();
        let f = decay_fit(&s).unwrap();
        assert!((f.eta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vdc_constant_vector() {
        let v = alloc::vec![alloc::vec![1.0, 0.0]; 110];
        let o = vdc_check(&v, 100, 10, 1.0).unwrap();
        assert!((o.lhs - 1.0).abs() < 1e-12);
        assert!((o.rhs - (2f64.sqrt() + 4.0 * 0.1f64.sqrt())).abs() < 1e-12);
        assert!(o.holds);
        assert!(vdc_check(&v, 5, 10, 1.0).is_err());
    }
}
