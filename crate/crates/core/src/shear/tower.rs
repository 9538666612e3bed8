//! Two flow towers over trimmed rotation-tower bases, with certified
//! level disjointness and a Monte-Carlo collision test.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::eval::envelope;
use super::partition::CircleInterval;
use crate::arithmetic::{denominator_bracket, interior_hit, length_f64, orbit_point, raw_length, AlphaContext, CirclePoint};
use crate::birkhoff::{hitting_count, OrbitTable};
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::math;
use crate::rng::{self, tag};
use crate::roof::RoofFunction;

/// Base (at height 0) and height; levels f_s(base), 0 ≤ s < height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tower {
    pub base: Vec<CircleInterval>,
    pub height: f64,
}

impl Tower {
    pub fn base_length(&self) -> f64 {
        self.base.iter().fold(0.0, |a, b| a + b.length())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerConfig {
    pub eta: f64,
    /// C in h₂ = q_{n−1} − C q_n^{γ+η}.
    pub c_height: f64,
    pub grid_min: usize,
    pub grid_max: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for TowerConfig {
    fn default() -> Self {
        TowerConfig { eta: 0.2, c_height: 1.0, grid_min: 1000, grid_max: 200_000, mc_samples: 20_000, seed: 0 }
    }
}

/// Certification of one tower.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCheck {
    pub return_time: u128,
    pub height: f64,
    pub grid: usize,
    /// Certified lower bound of S_{return}Φ over the base.
    pub min_sum: f64,
    /// Smallest grid value of S_{return}Φ.
    pub min_grid: f64,
    pub argmin: f64,
    /// max over the grid of |S_{return}Φ − return| / q_n^{γ+η}.
    pub es4_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerRecord {
    pub n: usize,
    pub q_n: u128,
    pub q_prev: u128,
    pub eta: f64,
    pub gamma: f64,
    /// None for a tower whose trimmed base is empty.
    pub checks: [Option<LevelCheck>; 2],
    pub certified: bool,
    /// μ(R₁ ∪ R₂) = (|B̃₁|h₁ + |B̃₂|h₂)/mean Φ.
    pub mass: f64,
    pub uncovered: f64,
    /// 4 q_n^{−η}.
    pub uncovered_bound: f64,
    pub mc_samples: usize,
    pub collisions: usize,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RokhlinTowers {
    pub first: Tower,
    pub second: Tower,
    pub record: TowerRecord,
}

/// Short arc between 0 and p, trimmed by `trim` at both ends; None when
/// the trim swallows it.
fn trimmed_arc(p: CirclePoint, trim: u128) -> Option<CircleInterval> {
    let d = p.dist_raw();
    let left = if p.0 == d { CirclePoint::ZERO } else { p };
    if d <= 2 * trim.checked_add(1)? {
        return None;
    }
    Some(CircleInterval { left: CirclePoint(left.0.wrapping_add(trim)), len: d - 2 * trim })
}

/// n with q_n ≤ t^{4ξ} < q_{n+1}.
pub fn build_rokhlin_towers<E: Executor>(exec: &E, ctx: &AlphaContext, roof: &RoofFunction, t: f64, eta: f64, xi: f64, cfg: &TowerConfig) -> Result<RokhlinTowers> {
    let n = denominator_bracket(math::pow(t, 4.0 * xi), ctx, 1.0)?;
    if n < 2 {
        return Err(Error::TooSmall { t, n });
    }
    build_rokhlin_towers_at(exec, ctx, roof, n, &TowerConfig { eta, ..*cfg })
}

pub fn build_rokhlin_towers_at<E: Executor>(exec: &E, ctx: &AlphaContext, roof: &RoofFunction, n: usize, cfg: &TowerConfig) -> Result<RokhlinTowers> {
    roof.validate()?;
    if n < 2 || n >= ctx.q.len() {
        return Err(invalid("n", format!("need 2 ≤ n < {}", ctx.q.len())));
    }
    if !(cfg.eta >= 0.0) {
        return Err(invalid("eta", "must be non-negative"));
    }
    let (q_n, q_prev) = (ctx.q[n], ctx.q[n - 1]);
    let qn = q_n as f64;
    let gamma = roof.v_exponent();
    let trim = raw_length(math::pow(qn, -(1.0 + cfg.eta)).min(0.25));
    let b1 = trimmed_arc(orbit_point(CirclePoint::ZERO, q_prev as i64, ctx), trim);
    let b2 = trimmed_arc(orbit_point(CirclePoint::ZERO, q_n as i64, ctx), trim);
    let dev = math::pow(qn, gamma + cfg.eta);
    let h1 = qn - dev;
    let h2 = q_prev as f64 - cfg.c_height * dev;
    let mut notes = Vec::new();
    let mut level = |b: Option<CircleInterval>, q: u128, h: f64, name: &str| -> Result<(Tower, Option<LevelCheck>)> {
        match b {
            Some(b) if h > 0.0 => Ok((Tower { base: alloc::vec![b], height: h }, Some(certify_level(exec, ctx, roof, b, q, h, dev, cfg)?))),
            Some(_) => {
                notes.push(format!("{name}: height {h} is not positive, tower dropped"));
                Ok((Tower { base: Vec::new(), height: 0.0 }, None))
            }
            None => {
                notes.push(format!("{name}: trim 2/q_n^(1+eta) exceeds the base length, base is empty"));
                Ok((Tower { base: Vec::new(), height: h.max(0.0) }, None))
            }
        }
    };
    let (first, c1) = level(b1, q_n, h1, "first tower")?;
    let (second, c2) = level(b2, q_prev, h2, "second tower")?;
    let mean = roof.mean()?;
    let mass = (first.base_length() * first.height + second.base_length() * second.height) / mean;
    let live: Vec<(CircleInterval, f64)> = [&first, &second].iter().filter_map(|t| t.base.first().map(|b| (*b, t.height))).collect();
    let collisions = collision_test(exec, ctx, roof, &live, cfg)?;
    Ok(RokhlinTowers {
        first,
        second,
        record: TowerRecord {
            n,
            q_n,
            q_prev,
            eta: cfg.eta,
            gamma,
            checks: [c1, c2],
            certified: true,
            mass,
            uncovered: 1.0 - mass,
            uncovered_bound: 4.0 * math::pow(qn, -cfg.eta),
            mc_samples: cfg.mc_samples,
            collisions,
            notes,
        },
    })
}

/// Certifies h ≤ min over the base of S_qΦ (`dev` scales the reported
/// ES4 ratio): grid values and slopes, plus a convex
/// lower envelope per cell (S_qΦ is convex where no orbit point j < q
/// meets the singularity, which is checked first).
#[allow(clippy::too_many_arguments)]
pub fn certify_level<E: Executor>(exec: &E, ctx: &AlphaContext, roof: &RoofFunction, base: CircleInterval, q: u128, h: f64, dev: f64, cfg: &TowerConfig) -> Result<LevelCheck> {
    if let Some(m) = interior_hit(base.left, base.len, 0, q as u64, ctx) {
        return Err(Error::Precondition(format!("orbit index {m} < {q} meets the singularity inside the base")));
    }
    let qf = q as f64;
    let want = math::ceil(base.length() * math::pow(qf, 1.0 + roof.v_exponent()));
    let g = (want as usize).clamp(cfg.grid_min.max(2), cfg.grid_max.max(cfg.grid_min.max(2)));
    let pts: Vec<Result<(f64, f64)>> = exec.map(g + 1, |i| {
        let off = crate::shear::eval::piece_offset(base.len - 1, i as u64, g as u64);
        let tb = OrbitTable::build(roof, ctx, base.at(off), 0, q as i64, [true, true, false])?;
        Ok((tb.sum_at(0, 0, q as i64), tb.sum_at(1, 0, q as i64)))
    });
    let pts: Vec<(f64, f64)> = pts.into_iter().collect::<Result<_>>()?;
    let cell = length_f64(base.len - 1) / g as f64;
    let mut min_sum = f64::INFINITY;
    let mut min_grid = f64::INFINITY;
    let mut argmin = 0.0;
    let mut es4: f64 = 0.0;
    for (i, w) in pts.windows(2).enumerate() {
        let lb = envelope(w[0].0, w[0].1, w[1].0, w[1].1, cell);
        if lb < min_sum {
            min_sum = lb;
            argmin = base.at(crate::shear::eval::piece_offset(base.len - 1, i as u64, g as u64)).to_f64();
        }
    }
    for p in &pts {
        min_grid = min_grid.min(p.0);
        es4 = es4.max((p.0 - qf).abs() / dev);
    }
    if h > min_sum {
        return Err(Error::TowerOverlap { x: argmin, sum: min_sum, height: h });
    }
    Ok(LevelCheck { return_time: q, height: h, grid: g + 1, min_sum, min_grid, argmin, es4_ratio: es4 })
}

/// Samples points of the tower levels and counts those that also lie on a
/// different level of either tower: f_s(x) for x ∈ B, 0 ≤ s < h, collides
/// iff x + iα meets a base for some 1 ≤ i ≤ N(x, s).
fn collision_test<E: Executor>(exec: &E, ctx: &AlphaContext, roof: &RoofFunction, towers: &[(CircleInterval, f64)], cfg: &TowerConfig) -> Result<usize> {
    if towers.is_empty() {
        return Ok(0);
    }
    let out = exec.map(cfg.mc_samples, |i| -> Result<bool> {
        let mut r = rng::stream(cfg.seed, tag::TOWER, i as u64);
        let (b, h) = towers[i % towers.len()];
        let x = b.at(rng::uniform_u128(&mut r) % b.len);
        let s = rng::uniform(&mut r) * h;
        let (nn, _) = hitting_count(roof, ctx, x, 0.0, s)?;
        if nn < 1 {
            return Ok(false);
        }
        Ok(towers.iter().any(|(c, _)| {
            let left = CirclePoint(x.0.wrapping_sub(c.left.0).wrapping_sub(c.len));
            interior_hit(left, c.len.saturating_add(1), 1, nn as u64, ctx).is_some()
        }))
    });
    let mut c = 0;
    for o in out {
        c += usize::from(o?);
    }
    Ok(c)
}
