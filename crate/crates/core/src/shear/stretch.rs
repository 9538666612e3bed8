//! Uniform stretching, almost measure preservation, and the randomized
//! lemma suites built on them.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::partition::{combinatorial_refinement, intersect_almost_partitions, AlmostPartition, CircleInterval};
use crate::arithmetic::CirclePoint;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::math;
use crate::rng::{self, tag, Rng};

/// Smallest accepted sample count for the brute-force check.
pub const MIN_SAMPLES: usize = 1000;

/// λ{x : ĝ(x) ≤ u} for the piecewise-linear interpolant ĝ of equally
/// spaced samples over an interval of the given length.
fn sublevel_measure(g: &[f64], length: f64, u: f64) -> f64 {
    let h = length / (g.len() - 1) as f64;
    let mut m = 0.0;
    for w in g.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if u >= hi {
            m += h;
        } else if u > lo {
            m += h * (u - lo) / (hi - lo);
        }
    }
    m
}

/// Definition check on a lattice of `levels + 1` equally spaced values:
/// sup − inf > K and every I_{u,v} with u < v on the lattice has
/// (1−ε)(v−u)/(sup−inf)·|I| < λ(I_{u,v}) < (1+ε)(v−u)/(sup−inf)·|I|.
/// Level sets are measured on the piecewise-linear interpolant.
pub fn uniform_stretching_bruteforce(g: &[f64], length: f64, epsilon: f64, k: f64, levels: usize) -> Result<bool> {
    if g.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { got: g.len(), need: MIN_SAMPLES });
    }
    let lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > k) {
        return Ok(false);
    }
    let l = levels.max(1);
    let f: Vec<f64> = (0..=l)
        .map(|i| {
            let u = lo + range * i as f64 / l as f64;
            if i == 0 {
                0.0
            } else if i == l {
                length
            } else {
                sublevel_measure(g, length, u)
            }
        })
        .collect();
    for a in 0..l {
        for b in a + 1..=l {
            let expect = (b - a) as f64 / l as f64 * length;
            let got = f[b] - f[a];
            if !((1.0 - epsilon) * expect < got && got < (1.0 + epsilon) * expect) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The sufficient criterion: inf|g′|·(b−a) > K and sup|g″|·(b−a) ≤ ε·inf|g′|.
pub fn uniform_stretching_sufficient(inf_g1: f64, sup_g2: f64, length: f64, epsilon: f64, k: f64) -> bool {
    inf_g1 * length > k && sup_g2 * length <= epsilon * inf_g1
}

/// A random monotone C² test function g(x) = s·(x + βx² + ρ sin(ωx)/ω) on [0,1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothMonotone {
    pub s: f64,
    pub beta: f64,
    pub rho: f64,
    pub omega: f64,
}

impl SmoothMonotone {
    pub fn random(r: &mut Rng) -> Self {
        SmoothMonotone {
            s: rng::uniform_range(r, 1.0, 100.0),
            beta: rng::uniform_range(r, 0.0, 0.05),
            rho: rng::uniform_range(r, 0.0, 0.01),
            omega: rng::uniform_range(r, 1.0, 10.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.s * (x + self.beta * x * x + self.rho * math::sin(self.omega * x) / self.omega)
    }

    fn d1(&self, x: f64) -> f64 {
        self.s * (1.0 + 2.0 * self.beta * x + self.rho * math::cos(self.omega * x))
    }

    fn d2(&self, x: f64) -> f64 {
        self.s * (2.0 * self.beta - self.rho * self.omega * math::sin(self.omega * x))
    }

    /// Certified (inf |g′|, sup |g″|) from a grid with Lipschitz padding.
    pub fn certified_bounds(&self, grid: usize) -> (f64, f64) {
        let h = 1.0 / (grid - 1) as f64;
        let lip2 = self.s * (2.0 * self.beta + self.rho * self.omega);
        let lip3 = self.s * self.rho * self.omega * self.omega;
        let mut inf1 = f64::INFINITY;
        let mut sup2: f64 = 0.0;
        for i in 0..grid {
            let x = i as f64 * h;
            inf1 = inf1.min(self.d1(x).abs());
            sup2 = sup2.max(self.d2(x).abs());
        }
        ((inf1 - lip2 * h / 2.0).max(0.0), sup2 + lip3 * h / 2.0)
    }
}

/// One instance of the sufficient ⇒ definition implication.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsOutcome {
    pub g: SmoothMonotone,
    pub epsilon: f64,
    pub k: f64,
    pub sufficient: bool,
    pub bruteforce: bool,
}

impl UsOutcome {
    pub fn consistent(&self) -> bool {
        !self.sufficient || self.bruteforce
    }
}

pub fn us_trial(seed: u64, i: u64, samples: usize) -> Result<UsOutcome> {
    let mut r = rng::stream(seed, tag::LEMMA, 1_000_000 + i);
    let g = SmoothMonotone::random(&mut r);
    let epsilon = rng::uniform_range(&mut r, 0.01, 0.3);
    let k = g.s * rng::uniform_range(&mut r, 0.5, 1.2);
    let (inf1, sup2) = g.certified_bounds(10_000);
    let sufficient = uniform_stretching_sufficient(inf1, sup2, 1.0, epsilon, k);
    let vals: Vec<f64> = (0..samples).map(|j| g.eval(j as f64 / (samples - 1) as f64)).collect();
    let bruteforce = uniform_stretching_bruteforce(&vals, 1.0, epsilon, k, 64)?;
    Ok(UsOutcome { g, epsilon, k, sufficient, bruteforce })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsSuite {
    pub trials: usize,
    pub sufficient: usize,
    pub violations: Vec<UsOutcome>,
}

impl UsSuite {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn us_suite<E: Executor>(exec: &E, seed: u64, trials: usize, samples: usize) -> Result<UsSuite> {
    let out: Result<Vec<UsOutcome>> = exec.map(trials, |i| us_trial(seed, i as u64, samples)).into_iter().collect();
    let out = out?;
    Ok(UsSuite {
        trials,
        sufficient: out.iter().filter(|o| o.sufficient).count(),
        violations: out.into_iter().filter(|o| !o.consistent()).collect(),
    })
}

/// Random partial partition of T into intervals with defect ≤ δ: random
/// cuts, each atom shortened by a random fraction ≤ δ, rotated at random.
pub fn random_partial_partition(r: &mut Rng, atoms: usize, delta: f64) -> Result<AlmostPartition> {
    let mut cuts: Vec<u128> = (0..atoms).map(|_| rng::uniform_u128(r)).collect();
    cuts.sort();
    cuts.dedup();
    let k = cuts.len();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let left = cuts[i];
        let len = cuts[(i + 1) % k].wrapping_sub(left);
        let len = if k == 1 { u128::MAX } else { len };
        let keep = 1.0 - delta * rng::uniform(r);
        let l = (len as f64 * keep) as u128;
        if l > 0 {
            out.push(CircleInterval { left: CirclePoint(left), len: l.min(len) });
        }
    }
    let mut p = AlmostPartition::measured(out, None)?;
    p.epsilon = p.epsilon.max(0.0);
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParLemmaSuite {
    pub instances: usize,
    /// Intersections whose measured defect exceeded ε_P + ε_Q.
    pub intersect_violations: usize,
    /// Refinements below (1 − 4√δ)(1 − 3ε₀).
    pub refinement_violations: usize,
    pub worst_refinement_margin: f64,
}

impl ParLemmaSuite {
    pub fn pass(&self) -> bool {
        self.intersect_violations == 0 && self.refinement_violations == 0
    }
}

/// Randomized instances of the intersection and refinement lemmas.
pub fn par_lemma_suite<E: Executor>(exec: &E, seed: u64, instances: usize) -> Result<ParLemmaSuite> {
    let out = exec.map(instances, |i| -> Result<(bool, bool, f64)> {
        let mut r = rng::stream(seed, tag::LEMMA, 2_000_000 + i as u64);
        let delta = rng::uniform_range(&mut r, 0.0, 0.1);
        let na = rng::uniform_int(&mut r, 1, 40) as usize;
        let nb = rng::uniform_int(&mut r, 1, 40) as usize;
        let p = random_partial_partition(&mut r, na, delta)?;
        let q = random_partial_partition(&mut r, nb, delta)?;
        let inter = intersect_almost_partitions(&p, &q)?;
        let ok_inter = inter.defect() <= p.defect() + q.defect() + 1e-12;
        let eps0 = rng::uniform_range(&mut r, 0.0, 0.3);
        let (ok_ref, margin) = match combinatorial_refinement(&p, &q, eps0) {
            Ok(rf) => (true, rf.partition.covered - rf.bound),
            Err(Error::RefinementBound { covered, bound }) => (false, covered - bound),
            Err(e) => return Err(e),
        };
        Ok((ok_inter, ok_ref, margin))
    });
    let mut s = ParLemmaSuite { instances, intersect_violations: 0, refinement_violations: 0, worst_refinement_margin: f64::INFINITY };
    for o in out {
        let (a, b, m) = o?;
        s.intersect_violations += usize::from(!a);
        s.refinement_violations += usize::from(!b);
        s.worst_refinement_margin = s.worst_refinement_margin.min(m);
    }
    Ok(s)
}

/// Outcome of an ε-almost measure-preservation check of a circle map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostMpReport {
    pub samples: usize,
    pub epsilon: f64,
    /// max over boxes of |μ(g⁻¹A)/ν(A) − 1|.
    pub defect: f64,
    pub worst_box: (f64, f64),
    /// Relative standard error at the worst box.
    pub stderr: f64,
    pub pass: bool,
    /// max over test observables of |∫φ∘g dμ − ∫φ dν| and the allowance 3‖φ‖∞ε.
    pub integral_deviation: f64,
    pub integral_bound: f64,
}

/// Statistical check that g pushes μ to within ε of ν on the test boxes
/// [a, b) ⊂ [0,1). `sampler` draws from μ, `nu` gives ν([a,b)). Test
/// observables are cos(2πkx), sin(2πkx) for k = 1..3.
pub fn almost_mp_check<G, S, N>(map: G, mut sampler: S, nu: N, boxes: &[(f64, f64)], epsilon: f64, samples: usize, seed: u64) -> AlmostMpReport
where
    G: Fn(f64) -> f64,
    S: FnMut(&mut Rng) -> f64,
    N: Fn(f64, f64) -> f64,
{
    let mut r = rng::stream(seed, tag::ALMOST_MP, 0);
    let mut hits = alloc::vec![0usize; boxes.len()];
    let mut obs = [0.0f64; 6];
    let tau = 2.0 * core::f64::consts::PI;
    for _ in 0..samples {
        let x = sampler(&mut r);
        let y = map(x);
        let y = y - math::floor(y);
        for (h, &(a, b)) in hits.iter_mut().zip(boxes) {
            if y >= a && y < b {
                *h += 1;
            }
        }
        for k in 0..3 {
            let w = tau * (k + 1) as f64 * y;
            obs[2 * k] += math::cos(w);
            obs[2 * k + 1] += math::sin(w);
        }
    }
    let n = samples as f64;
    let mut defect: f64 = 0.0;
    let mut worst = (0.0, 0.0);
    let mut worst_se = 0.0;
    let mut pass = true;
    for (&h, &(a, b)) in hits.iter().zip(boxes) {
        let target = nu(a, b);
        if !(target > 0.0) {
            continue;
        }
        let p = h as f64 / n;
        let se = math::sqrt(p.max(target) * (1.0 - p.min(target)) / n) / target;
        let dev = (p / target - 1.0).abs();
        if dev > epsilon + 3.0 * se {
            pass = false;
        }
        if dev > defect {
            defect = dev;
            worst = (a, b);
            worst_se = se;
        }
    }
    // ∫φ dν by a midpoint rule over ν
    let cells = 4096;
    let mut integral_deviation: f64 = 0.0;
    for k in 0..3 {
        let (mut ic, mut is) = (0.0, 0.0);
        for c in 0..cells {
            let a = c as f64 / cells as f64;
            let b = (c + 1) as f64 / cells as f64;
            let w = tau * (k + 1) as f64 * (a + b) / 2.0;
            let m = nu(a, b);
            ic += math::cos(w) * m;
            is += math::sin(w) * m;
        }
        integral_deviation = integral_deviation.max((obs[2 * k] / n - ic).abs()).max((obs[2 * k + 1] / n - is).abs());
    }
    AlmostMpReport {
        samples,
        epsilon,
        defect,
        worst_box: worst,
        stderr: worst_se,
        pass,
        integral_deviation,
        integral_bound: 3.0 * epsilon,
    }
}

/// `count` equal boxes covering [0,1).
pub fn equal_boxes(count: usize) -> Vec<(f64, f64)> {
    (0..count).map(|i| (i as f64 / count as f64, (i + 1) as f64 / count as f64)).collect()
}

/// ν = Lebesgue.
pub fn lebesgue(a: f64, b: f64) -> f64 {
    b - a
}
