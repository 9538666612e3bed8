//! The special flow over R_α under Φ, sampling of its invariant measure, and
//! smooth compactly supported test observables.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::arithmetic::{orbit_point, AlphaContext, CirclePoint};
use crate::birkhoff::hitting_count;
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::rng;
use crate::roof::RoofFunction;

/// A point (x, r) of the suspension with 0 ≤ r < Φ(x).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub x: CirclePoint,
    pub r: f64,
}

impl FlowPoint {
    pub fn new(x: CirclePoint, r: f64) -> Self {
        FlowPoint { x, r }
    }
}

/// f_t(x, r) = (T^N x, r + t − S_N Φ(x)) with N = N(x, r, t).
pub fn evolve(roof: &RoofFunction, ctx: &AlphaContext, p: FlowPoint, t: f64) -> Result<FlowPoint> {
    if t == 0.0 {
        return Ok(p);
    }
    let (n, r) = hitting_count(roof, ctx, p.x, p.r, t)?;
    Ok(FlowPoint { x: orbit_point(p.x, n, ctx), r })
}

/// Whether two points agree in the quotient up to `tol` per coordinate; a
/// point sitting on the roof of one fiber equals the bottom of the next.
pub fn same_point(roof: &RoofFunction, ctx: &AlphaContext, a: FlowPoint, b: FlowPoint, tol: f64) -> bool {
    let close = |p: FlowPoint, q: FlowPoint| p.x.sub(q.x).dist() <= tol && (p.r - q.r).abs() <= tol;
    if close(a, b) {
        return true;
    }
    let lift = |p: FlowPoint| -> Option<FlowPoint> {
        let h = roof.eval(p.x, 0).ok()?;
        (h - p.r <= tol).then(|| FlowPoint { x: orbit_point(p.x, 1, ctx), r: p.r - h })
    };
    lift(a).is_some_and(|a2| close(a2, b)) || lift(b).is_some_and(|b2| close(a, b2))
}

/// (1 − u²)³ on |u| < 1.
#[inline]
pub fn bump(u: f64) -> f64 {
    let v = 1.0 - u * u;
    if v <= 0.0 {
        0.0
    } else {
        v * v * v
    }
}

/// ∫_{-1}^{u} bump.
fn bump_primitive(u: f64) -> f64 {
    let u = u.clamp(-1.0, 1.0);
    let p = |u: f64| u - u * u * u + 0.6 * u.powi_5() - u.powi_7() / 7.0;
    p(u) - p(-1.0)
}

trait Pow {
    fn powi_5(self) -> f64;
    fn powi_7(self) -> f64;
}

impl Pow for f64 {
    fn powi_5(self) -> f64 {
        let s = self * self;
        s * s * self
    }
    fn powi_7(self) -> f64 {
        let s = self * self;
        s * s * s * self
    }
}

/// ∫ bump over the real line.
pub const BUMP_INTEGRAL: f64 = 32.0 / 35.0;
/// sup |bump′|, attained at u² = 1/5.
pub const BUMP_D1: f64 = 1.717_300_206_719_839;
/// sup |bump″|, attained at u = 0.
pub const BUMP_D2: f64 = 6.0;

/// Test observables on the suspension; all are C² with support strictly
/// below the roof over their x-support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Observable {
    /// bump((x − x₀)/ρₓ) · bump((r − r₀)/ρᵣ), x-difference taken on the circle.
    BoxBump { x0: f64, r0: f64, rx: f64, rr: f64 },
    /// cos(2πk(x − x₀)) · bump((r − r₀)/ρᵣ).
    FourierBump { x0: f64, r0: f64, rr: f64, k: u32 },
    /// A constant function (only for degenerate checks).
    Constant { value: f64 },
}

/// Support of an observable: a circle arc of half-width `rx` (0.5 means all of
/// T) times a height range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub x0: f64,
    pub rx: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl SupportBox {
    pub fn contains_x(&self, x: CirclePoint) -> bool {
        self.rx >= 0.5 || x.sub(CirclePoint::from_f64(self.x0)).dist() < self.rx
    }

    pub fn x_length(&self) -> f64 {
        (2.0 * self.rx).min(1.0)
    }
}

#[inline]
fn circ_diff(x: f64, x0: f64) -> f64 {
    let d = x - x0;
    d - math::floor(d + 0.5)
}

impl Observable {
    pub fn box_bump(x0: f64, r0: f64, rx: f64, rr: f64) -> Self {
        Observable::BoxBump { x0, r0, rx, rr }
    }

    pub fn eval(&self, p: FlowPoint) -> f64 {
        match *self {
            Observable::BoxBump { x0, r0, rx, rr } => {
                let bx = bump(circ_diff(p.x.to_f64(), x0) / rx);
                if bx == 0.0 {
                    0.0
                } else {
                    bx * bump((p.r - r0) / rr)
                }
            }
            Observable::FourierBump { x0, r0, rr, k } => {
                let br = bump((p.r - r0) / rr);
                if br == 0.0 {
                    0.0
                } else {
                    br * math::cos(2.0 * core::f64::consts::PI * k as f64 * circ_diff(p.x.to_f64(), x0))
                }
            }
            Observable::Constant { value } => value,
        }
    }

    /// ∫_{r_a}^{r_b} φ(x, r) dr, exact.
    pub fn fiber_integral(&self, x: CirclePoint, r_a: f64, r_b: f64) -> f64 {
        match *self {
            Observable::BoxBump { x0, r0, rx, rr } => {
                let bx = bump(circ_diff(x.to_f64(), x0) / rx);
                if bx == 0.0 {
                    return 0.0;
                }
                bx * rr * (bump_primitive((r_b - r0) / rr) - bump_primitive((r_a - r0) / rr))
            }
            Observable::FourierBump { x0, r0, rr, k } => {
                let c = math::cos(2.0 * core::f64::consts::PI * k as f64 * circ_diff(x.to_f64(), x0));
                c * rr * (bump_primitive((r_b - r0) / rr) - bump_primitive((r_a - r0) / rr))
            }
            Observable::Constant { value } => value * (r_b - r_a),
        }
    }

    pub fn support(&self) -> Option<SupportBox> {
        match *self {
            Observable::BoxBump { x0, r0, rx, rr } => Some(SupportBox { x0, rx, r_lo: r0 - rr, r_hi: r0 + rr }),
            Observable::FourierBump { x0, r0, rr, .. } => Some(SupportBox { x0, rx: 0.5, r_lo: r0 - rr, r_hi: r0 + rr }),
            Observable::Constant { .. } => None,
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            Observable::Constant { value } => Some(value),
            _ => None,
        }
    }

    /// Checks radii and that the support stays below the roof on its x-support.
    pub fn validate(&self, roof: &RoofFunction) -> Result<()> {
        let Some(b) = self.support() else { return Ok(()) };
        if let Observable::BoxBump { rx, .. } = *self {
            if !(rx > 0.0 && rx < 0.5) {
                return Err(invalid("observable.rx", "must lie in (0, 0.5)"));
            }
        }
        if !(b.r_hi > b.r_lo) || b.r_lo < 0.0 {
            return Err(invalid("observable.rr", "height support must be a non-empty range in r >= 0"));
        }
        let floor = roof_floor(roof, &b);
        if !(b.r_hi < floor) {
            return Err(invalid("observable.r0", alloc::format!("support reaches r = {} but the roof dips to {floor} over it", b.r_hi)));
        }
        Ok(())
    }

    /// ∫ φ dμ^Φ in closed form (valid when `validate` passes).
    pub fn mean(&self, roof: &RoofFunction) -> Result<f64> {
        let m = roof.mean()?;
        Ok(match *self {
            Observable::BoxBump { rx, rr, .. } => rx * rr * BUMP_INTEGRAL * BUMP_INTEGRAL / m,
            Observable::FourierBump { rr, k, .. } => {
                if k == 0 {
                    rr * BUMP_INTEGRAL / m
                } else {
                    0.0
                }
            }
            Observable::Constant { value } => value,
        })
    }

    /// (C⁰, C¹, C²) norms: sup of |φ| and of all partial derivatives of order 1, 2.
    pub fn norms(&self) -> (f64, f64, f64) {
        match *self {
            Observable::BoxBump { rx, rr, .. } => {
                let c1 = BUMP_D1 / rx.min(rr);
                let c2 = (BUMP_D2 / (rx * rx)).max(BUMP_D2 / (rr * rr)).max(BUMP_D1 * BUMP_D1 / (rx * rr));
                (1.0, c1, c2)
            }
            Observable::FourierBump { rr, k, .. } => {
                let w = 2.0 * core::f64::consts::PI * k as f64;
                let c1 = (BUMP_D1 / rr).max(w);
                let c2 = (BUMP_D2 / (rr * rr)).max(w * w).max(w * BUMP_D1 / rr);
                (1.0, c1, c2)
            }
            Observable::Constant { value } => (value.abs(), 0.0, 0.0),
        }
    }
}

/// min Φ over the x-range of a support box.
pub fn roof_floor(roof: &RoofFunction, b: &SupportBox) -> f64 {
    let (xm, vm) = roof.minimum();
    if b.rx >= 0.5 || roof.is_constant() {
        return vm;
    }
    let lo = b.x0 - b.rx;
    let hi = b.x0 + b.rx;
    if lo <= 0.0 || hi >= 1.0 {
        return 0.0; // arc straddles the singular fiber
    }
    if xm >= lo && xm <= hi {
        vm
    } else {
        roof.eval_f64(lo, 0).min(roof.eval_f64(hi, 0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// x uniform, r uniform on [0, Φ(x)], weight Φ(x)/mean Φ.
    WeightedBase,
    /// x drawn from the density Φ/mean Φ, r uniform on [0, Φ(x)], weight 1.
    FiberUniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n_samples: usize,
    /// Fiber draws per base point.
    pub stratification: usize,
    pub scheme: Scheme,
    /// Orbit points per block in the correlation engine.
    pub block_len: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { seed: 1, n_samples: 10_000, stratification: 1, scheme: Scheme::FiberUniform, block_len: 1000 }
    }
}

impl SamplerConfig {
    /// WeightedBase has infinite weight variance once ∫Φ² diverges (γ ≥ 1/2);
    /// such configs are switched to FiberUniform and a warning is returned.
    pub fn effective_scheme(&self, roof: &RoofFunction) -> (Scheme, Option<String>) {
        if self.scheme == Scheme::WeightedBase && roof.is_power() && roof.gamma >= 0.5 && !roof.is_constant() {
            return (
                Scheme::FiberUniform,
                Some(alloc::format!("gamma = {} >= 1/2: WeightedBase has infinite variance, using FiberUniform", roof.gamma)),
            );
        }
        (self.scheme, None)
    }
}

/// Sample `i` of the measure stream: a point and its weight.
pub fn sample_point(roof: &RoofFunction, scheme: Scheme, seed: u64, strat: usize, i: usize) -> (FlowPoint, f64) {
    let strat = strat.max(1);
    let base = i / strat;
    let mut rb = rng::stream(seed, rng::tag::SAMPLER, base as u64);
    let mean = roof.mean().unwrap_or(1.0);
    let (x, w) = match scheme {
        Scheme::WeightedBase => {
            let x = CirclePoint(rng::uniform_u128(&mut rb));
            (x, None)
        }
        Scheme::FiberUniform => {
            let u = [rng::uniform(&mut rb), rng::uniform(&mut rb), rng::uniform(&mut rb)];
            (CirclePoint::from_f64(roof.sample_base(u)), Some(1.0))
        }
    };
    // keep clear of the guard; the excluded mass is below 2^-80
    let x = if x.dist_raw() < roof.guard_raw() { CirclePoint(roof.guard_raw().max(1) << 1) } else { x };
    let h = roof.eval(x, 0).unwrap_or(f64::MAX);
    let w = w.unwrap_or(h / mean);
    let mut rf = rng::stream(seed, rng::tag::SAMPLER, (1u64 << 63) | i as u64);
    let r = h * rng::uniform(&mut rf);
    (FlowPoint { x, r }, w)
}

/// `n_samples` weighted draws with E[Σ w F]/n = ∫ F dμ^Φ.
pub fn sample_measure(roof: &RoofFunction, cfg: &SamplerConfig) -> Result<Vec<(FlowPoint, f64)>> {
    roof.mean()?;
    let (scheme, _) = cfg.effective_scheme(roof);
    Ok((0..cfg.n_samples).map(|i| sample_point(roof, scheme, cfg.seed, cfg.stratification, i)).collect())
}

/// Mean and standard error of weighted values.
pub fn weighted_mean(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let (mut n, mut s, mut s2) = (0usize, 0.0, 0.0);
    for v in values {
        n += 1;
        s += v;
        s2 += v * v;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let m = s / n as f64;
    let var = if n > 1 { ((s2 - n as f64 * m * m) / (n as f64 - 1.0)).max(0.0) } else { 0.0 };
    (m, math::sqrt(var / n as f64), n)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowPropsConfig {
    pub seed: u64,
    /// Random (p, s, t) triples for composition and inverse.
    pub trials: usize,
    pub time_bound: f64,
    pub tolerance: f64,
    pub measure_samples: usize,
    pub measure_times: Vec<f64>,
    /// Test box [x₀ ± rx] × [r_lo, r_hi].
    pub test_box: SupportBox,
}

impl Default for FlowPropsConfig {
    fn default() -> Self {
        FlowPropsConfig {
            seed: 1,
            trials: 1000,
            time_bound: 1e3,
            tolerance: 1e-9,
            measure_samples: 20_000,
            measure_times: alloc::vec![10.0, 100.0, 1000.0],
            test_box: SupportBox { x0: 0.5, rx: 0.15, r_lo: 0.05, r_hi: 0.3 },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub checked: usize,
    pub failures: usize,
    /// Worst deviation, in the suite's own unit (absolute or stderr multiples).
    pub worst: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowPropsReport {
    pub suites: Vec<SuiteResult>,
    pub pass: bool,
}

fn random_point(roof: &RoofFunction, r: &mut rng::Rng) -> FlowPoint {
    let u = [rng::uniform(r), rng::uniform(r), rng::uniform(r)];
    let x = CirclePoint::from_f64(roof.sample_base(u));
    let x = if x.dist_raw() < roof.guard_raw() << 20 { CirclePoint::from_f64(0.5) } else { x };
    let h = roof.eval(x, 0).unwrap();
    FlowPoint { x, r: h * rng::uniform(r) }
}

/// Outcome of one composition / inverse / range trial.
#[derive(Clone, Copy, Debug, Default)]
pub struct PropsTrial {
    pub composition_err: f64,
    pub inverse_err: f64,
    pub canonical: bool,
    pub dropped: bool,
}

fn point_err(roof: &RoofFunction, ctx: &AlphaContext, a: FlowPoint, b: FlowPoint, tol: f64) -> f64 {
    let dx = a.x.sub(b.x).dist();
    let dr = (a.r - b.r).abs();
    if dx <= tol && dr <= tol {
        dx.max(dr)
    } else if same_point(roof, ctx, a, b, tol) {
        0.0 // equal across a fiber boundary
    } else {
        dx.max(dr).max(tol * 2.0)
    }
}

pub fn props_trial(roof: &RoofFunction, ctx: &AlphaContext, cfg: &FlowPropsConfig, i: usize) -> PropsTrial {
    let mut r = rng::stream(cfg.seed, rng::tag::FLOW_PROPS, i as u64);
    let p = random_point(roof, &mut r);
    let s = rng::uniform_range(&mut r, -cfg.time_bound, cfg.time_bound);
    let t = rng::uniform_range(&mut r, -cfg.time_bound, cfg.time_bound);
    let run = || -> Result<PropsTrial> {
        let pt = evolve(roof, ctx, p, t)?;
        let a = evolve(roof, ctx, p, s + t)?;
        let b = evolve(roof, ctx, pt, s)?;
        let back = evolve(roof, ctx, pt, -t)?;
        let canonical = [pt, a, b, back].iter().all(|q| q.r >= 0.0 && q.r < roof.eval(q.x, 0).unwrap_or(0.0));
        Ok(PropsTrial {
            composition_err: point_err(roof, ctx, a, b, cfg.tolerance),
            inverse_err: point_err(roof, ctx, back, p, cfg.tolerance),
            canonical,
            dropped: false,
        })
    };
    match run() {
        Ok(v) => v,
        Err(_) => PropsTrial { dropped: true, canonical: true, ..Default::default() },
    }
}

/// Whether sample `i` lands in the test box after time t, and the box mass.
pub fn measure_trial(roof: &RoofFunction, ctx: &AlphaContext, cfg: &FlowPropsConfig, t: f64, i: usize) -> Option<bool> {
    let (p, _) = sample_point(roof, Scheme::FiberUniform, cfg.seed ^ 0x5eed, 1, i);
    let q = evolve(roof, ctx, p, t).ok()?;
    let b = &cfg.test_box;
    Some(b.contains_x(q.x) && q.r >= b.r_lo && q.r < b.r_hi)
}

pub fn box_mass(roof: &RoofFunction, b: &SupportBox) -> Result<f64> {
    Ok(b.x_length() * (b.r_hi - b.r_lo) / roof.mean()?)
}

/// Folds trial outcomes into the report; the std crate produces the same
/// inputs in parallel.
pub fn flow_props_report(
    roof: &RoofFunction,
    cfg: &FlowPropsConfig,
    trials: &[PropsTrial],
    hits: &[(f64, Vec<Option<bool>>)],
) -> Result<FlowPropsReport> {
    let mut suites = Vec::new();
    let kept: Vec<&PropsTrial> = trials.iter().filter(|t| !t.dropped).collect();
    let dropped = trials.len() - kept.len();
    for (name, f) in [("composition", 0usize), ("inverse", 1)] {
        let errs = kept.iter().map(|t| if f == 0 { t.composition_err } else { t.inverse_err });
        let worst = errs.clone().fold(0.0, f64::max);
        let failures = errs.filter(|e| !(*e <= cfg.tolerance)).count();
        suites.push(SuiteResult {
            name: name.into(),
            checked: kept.len(),
            failures,
            worst,
            pass: failures == 0 && dropped * 100 < trials.len().max(1),
            detail: alloc::format!("tolerance {:e}, dropped {dropped}", cfg.tolerance),
        });
    }
    let bad = kept.iter().filter(|t| !t.canonical).count();
    suites.push(SuiteResult {
        name: "canonical-range".into(),
        checked: kept.len(),
        failures: bad,
        worst: bad as f64,
        pass: bad == 0,
        detail: "0 <= r < Phi(x) for every image".into(),
    });
    let mass = box_mass(roof, &cfg.test_box)?;
    for (t, h) in hits {
        let valid: Vec<bool> = h.iter().flatten().copied().collect();
        let (m, se, n) = weighted_mean(valid.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        let z = (m - mass).abs() / se.max(1e-300);
        suites.push(SuiteResult {
            name: alloc::format!("measure-preservation t={t}"),
            checked: n,
            failures: usize::from(z > 3.0),
            worst: z,
            pass: z <= 3.0 && (h.len() - n) * 100 < h.len().max(1),
            detail: alloc::format!("mu(f_-t B) = {m:.5} +- {se:.5}, mu(B) = {mass:.5}"),
        });
    }
    let pass = suites.iter().all(|s| s.pass);
    Ok(FlowPropsReport { suites, pass })
}

pub fn check_flow_props_config(roof: &RoofFunction, cfg: &FlowPropsConfig) -> Result<()> {
    let floor = roof_floor(roof, &cfg.test_box);
    if !(cfg.test_box.r_hi <= floor) {
        return Err(Error::Precondition("measure test box must sit below the roof".into()));
    }
    roof.mean()?;
    Ok(())
}

/// Sequential driver for the flow invariants.
pub fn verify_flow_props(roof: &RoofFunction, ctx: &AlphaContext, cfg: &FlowPropsConfig) -> Result<FlowPropsReport> {
    check_flow_props_config(roof, cfg)?;
    let trials: Vec<PropsTrial> = (0..cfg.trials).map(|i| props_trial(roof, ctx, cfg, i)).collect();
    let hits: Vec<(f64, Vec<Option<bool>>)> = cfg
        .measure_times
        .iter()
        .map(|&t| (t, (0..cfg.measure_samples).map(|i| measure_trial(roof, ctx, cfg, t, i)).collect()))
        .collect();
    flow_props_report(roof, cfg, &trials, &hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{expand_cf, AlphaSpec};

    #[test]
    fn constant_roof_evolution() {
        let ctx = expand_cf(&AlphaSpec::golden(), 40).unwrap();
        let roof = RoofFunction::constant(1.0);
        let x = CirclePoint::from_f64(0.3);
        let q = evolve(&roof, &ctx, FlowPoint::new(x, 0.0), 2.5).unwrap();
        assert_eq!(q.x, orbit_point(x, 2, &ctx));
        assert!((q.r - 0.5).abs() < 1e-15);
        let p = FlowPoint::new(x, 0.7);
        assert_eq!(evolve(&roof, &ctx, p, 0.0).unwrap(), p);
    }

    #[test]
    fn bump_constants() {
        assert!((bump_primitive(1.0) - BUMP_INTEGRAL).abs() < 1e-15);
        let u = 1.0 / libm::sqrt(5.0);
        let d = 6.0 * u * (1.0 - u * u) * (1.0 - u * u);
        assert!((d - BUMP_D1).abs() < 1e-12);
    }
}
