//! Checkers for (J1)–(J3), (P1)–(P5), (QJ0)–(QJ3) and (QP1)–(QP5).

use alloc::string::String;
use alloc::vec::Vec;
use alloc::vec;

use serde::{Deserialize, Serialize};

use super::eval::{self, AtomData, Class};
use super::partition::AlmostPartition;
use super::stretch::{uniform_stretching_bruteforce, uniform_stretching_sufficient};
use crate::arithmetic::{denominator_bracket, interior_hit, raw_length, AlphaContext, CirclePoint};
use crate::birkhoff::{birkhoff_sum, Kappa, OrbitTable};
use crate::error::{invalid, Result};
use crate::exec::Executor;
use crate::math;
use crate::roof::{RoofFunction, Selector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    J1,
    J2,
    J3,
    P1,
    P2,
    P3,
    P4,
    P5,
    QJ0,
    QJ1,
    QJ2,
    QJ3,
    QP1,
    QP2,
    QP3,
    QP4,
    QP5,
}

/// A checked condition on one atom. `margin` is positive on a pass and
/// orders witnesses: the smallest margin is the worst case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub cond: Condition,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub margin: f64,
    /// Witness point (circle coordinate) and Birkhoff index.
    pub witness_x: f64,
    pub witness_n: i64,
}

impl Verdict {
    fn at_least(cond: Condition, value: f64, threshold: f64, slack: f64, x: f64, n: i64) -> Self {
        let thr = threshold * (1.0 - slack);
        let pass = value >= thr;
        let margin = if thr > 0.0 { value / thr - 1.0 } else if pass { 1.0 } else { -1.0 };
        Verdict { cond, pass, value, threshold, margin, witness_x: x, witness_n: n }
    }

    fn above(cond: Condition, value: f64, threshold: f64, slack: f64, x: f64, n: i64) -> Self {
        let mut v = Self::at_least(cond, value, threshold, slack, x, n);
        v.pass = value > threshold * (1.0 - slack);
        if !v.pass {
            v.margin = v.margin.min(-f64::MIN_POSITIVE);
        }
        v
    }

    fn at_most(cond: Condition, value: f64, threshold: f64, slack: f64, x: f64, n: i64) -> Self {
        let thr = threshold * (1.0 + slack);
        let pass = value <= thr;
        let margin = if thr > 0.0 { 1.0 - value / thr } else if pass { 1.0 } else { -1.0 };
        Verdict { cond, pass, value, threshold, margin, witness_x: x, witness_n: n }
    }

    fn below(cond: Condition, value: f64, threshold: f64, slack: f64, x: f64, n: i64) -> Self {
        let mut v = Self::at_most(cond, value, threshold, slack, x, n);
        v.pass = value < threshold * (1.0 + slack);
        if !v.pass {
            v.margin = v.margin.min(-f64::MIN_POSITIVE);
        }
        v
    }

    fn flag(cond: Condition, pass: bool, value: f64, x: f64, n: i64) -> Self {
        Verdict { cond, pass, value, threshold: 0.0, margin: if pass { 1.0 } else { -1.0 }, witness_x: x, witness_n: n }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub left: f64,
    pub length: f64,
    pub n_min: i64,
    pub n_max: i64,
    /// inf |S_NΦ′|·|I| over the atom and N range.
    pub stretch: f64,
    /// sup S_NΦ″·|I| over the atom and N range.
    pub distortion: f64,
    pub monotone: bool,
    pub verdicts: Vec<Verdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub cond: Condition,
    pub passed: usize,
    pub failed: usize,
    pub worst: Option<Verdict>,
}

/// A measure-accounting entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loss {
    pub reason: String,
    pub measure: f64,
    pub atoms: usize,
}

/// Measured counterpart of the construction's lower bound on |S_{N(y,t)}Φ′|.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub bound: f64,
    pub measured_min: f64,
    pub atoms_meeting: usize,
    pub atoms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchReport {
    pub family: String,
    pub t: f64,
    pub kappa: f64,
    pub n: usize,
    pub q_n: u128,
    pub parameters: Vec<(String, f64)>,
    pub atoms_total: usize,
    pub atoms_passed: usize,
    pub pass_fraction: f64,
    pub covered: f64,
    pub covered_passed: f64,
    pub defect: f64,
    /// Set for an empty partition: every condition holds vacuously.
    pub empty: bool,
    pub summaries: Vec<ConditionSummary>,
    /// Per-atom records in endpoint order, at most `record_limit` of them.
    pub atoms: Vec<AtomRecord>,
    pub ledger: Vec<Loss>,
    pub lower_bound: Option<LowerBound>,
    pub notes: Vec<String>,
}

impl StretchReport {
    pub fn all_pass(&self) -> bool {
        self.atoms_passed == self.atoms_total
    }

    pub fn summary(&self, c: Condition) -> Option<&ConditionSummary> {
        self.summaries.iter().find(|s| s.cond == c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub kappa: Kappa,
    /// Largest spread of N(·,t) over one atom that is resolved exactly.
    pub n_window: i64,
    pub record_limit: usize,
    /// V_R parameter ζ.
    pub zeta: f64,
    /// Relative slack on every threshold.
    pub slack: f64,
    /// Atoms that also get the brute-force uniform-stretching check in (P5)/(QP5).
    pub bruteforce_atoms: usize,
    pub bruteforce_samples: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { kappa: Kappa::LogLog, n_window: 256, record_limit: 10_000, zeta: 0.1, slack: 0.0, bruteforce_atoms: 2, bruteforce_samples: 1000 }
    }
}

/// Which condition list to check, with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    J { k: f64 },
    P { m: f64, epsilon: f64 },
    QJ { xi_prime: f64, epsilon: f64 },
    QP { m: f64, xi: f64 },
}

impl Family {
    fn name(&self) -> &'static str {
        match self {
            Family::J { .. } => "J",
            Family::P { .. } => "P",
            Family::QJ { .. } => "QJ",
            Family::QP { .. } => "QP",
        }
    }

    fn conditions(&self) -> Vec<Condition> {
        use Condition::*;
        match self {
            Family::J { .. } => vec![J1, J2, J3],
            Family::P { .. } => vec![P1, P2, P3, P4, P5],
            Family::QJ { .. } => vec![QJ0, QJ1, QJ2, QJ3],
            Family::QP { .. } => vec![QP1, QP2, QP3, QP4, QP5],
        }
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        let p = |k: &str, v: f64| (String::from(k), v);
        match *self {
            Family::J { k } => vec![p("K", k)],
            Family::P { m, epsilon } => vec![p("M", m), p("epsilon", epsilon)],
            Family::QJ { xi_prime, epsilon } => vec![p("xi_prime", xi_prime), p("epsilon", epsilon)],
            Family::QP { m, xi } => vec![p("M", m), p("xi", xi)],
        }
    }
}

/// Context shared by the verdict functions.
pub(crate) struct Env<'a> {
    pub ctx: &'a AlphaContext,
    pub roof: &'a RoofFunction,
    pub t: f64,
    pub cfg: &'a CheckConfig,
    pub min_phi: f64,
    pub mean: f64,
}

impl Env<'_> {
    /// Some n in [n0, n0 + count) with R^n(I) ⊄ V_D, or None.
    fn leaves_v(&self, left: CirclePoint, len: u128, d: f64, n0: i64, count: u64) -> core::result::Result<Option<i64>, ()> {
        let thr = self.roof.v_threshold(d, self.cfg.zeta).map_err(|_| ())?;
        let Some((dp, dm)) = self.roof.sublevel_margins(thr) else {
            return Ok(Some(n0));
        };
        // complement of V_D is (−d₋, d₊) around 0
        let (rp, rm) = (raw_length(dp), raw_length(dm));
        let l = CirclePoint(left.0.wrapping_sub(rp));
        let total = len.saturating_add(rp).saturating_add(rm);
        Ok(interior_hit(l, total, n0, count, self.ctx))
    }
}

/// Geometry of the atom being judged.
#[derive(Clone, Copy)]
pub(crate) struct Geo {
    pub left: CirclePoint,
    pub len: u128,
}

impl Geo {
    fn x(&self, right: bool) -> f64 {
        if right {
            CirclePoint(self.left.0.wrapping_add(self.len)).to_f64()
        } else {
            self.left.to_f64()
        }
    }

    fn h(&self) -> f64 {
        crate::arithmetic::length_f64(self.len)
    }
}

fn singular_hit(env: &Env, g: Geo, d: &AtomData) -> Option<i64> {
    interior_hit(g.left, g.len, 0, (d.n_max.max(0) + 1) as u64, env.ctx)
}

fn c1_verdict(cond: Condition, env: &Env, g: Geo, d: &AtomData) -> Verdict {
    let hit = if d.ok { singular_hit(env, g, d) } else { None };
    let pass = d.ok && hit.is_none();
    Verdict::flag(cond, pass, g.h(), g.x(false), hit.unwrap_or(d.n_max))
}

fn v_verdict(cond: Condition, env: &Env, g: Geo, d: &AtomData, ds: &[f64]) -> Verdict {
    if !d.ok {
        return Verdict::flag(cond, false, f64::NAN, g.x(false), d.n_min);
    }
    for &dd in ds {
        let extra = math::ceil(dd / env.min_phi) as i64;
        let count = (d.n_max + extra - d.n_min + 1).max(0) as u64;
        match env.leaves_v(g.left, g.len, dd, d.n_min, count) {
            Ok(None) => {}
            Ok(Some(n)) => return Verdict::flag(cond, false, dd, g.x(false), n),
            Err(()) => return Verdict::flag(cond, false, dd, g.x(false), d.n_min),
        }
    }
    Verdict::flag(cond, true, ds[0], g.x(false), d.n_max)
}

/// (P5)/(QP5) through the sufficient criterion: inf|S′|·|I| > K|I|/(d−c)
/// reduces to inf|S′|·|I| > k_full, and sup|S″|·|I| ≤ ε·inf|S′|.
fn stretch_verdict(cond: Condition, env: &Env, g: Geo, d: &AtomData, eps: f64, k_full: f64) -> Verdict {
    let h = g.h();
    let s = env.cfg.slack;
    let ok = d.ok && d.monotone && d.convex && uniform_stretching_sufficient(d.d1_min, d.d2_max, h, eps * (1.0 + s), k_full * (1.0 - s));
    let mut v = Verdict::above(cond, d.d1_min * h, k_full, s, g.x(d.d1_witness.1), d.d1_witness.0);
    v.pass = ok;
    if !ok && v.margin > 0.0 {
        v.margin = -f64::MIN_POSITIVE;
    }
    v
}

pub(crate) fn verdicts(fam: &Family, env: &Env, g: Geo, d: &AtomData, qj0: Option<Verdict>) -> Vec<Verdict> {
    use Condition::*;
    let s = env.cfg.slack;
    let h = g.h();
    let nan_if = |x: f64| if d.ok { x } else { f64::NAN };
    match *fam {
        Family::J { k } => vec![
            c1_verdict(J1, env, g, d),
            Verdict::at_least(J2, nan_if(d.d1_min * h), k, s, g.x(d.d1_witness.1), d.d1_witness.0),
            Verdict::at_most(J3, nan_if(d.d2_max * h), d.d1_min / k, s, g.x(d.d2_witness.1), d.d2_witness.0),
        ],
        Family::P { m, epsilon } => vec![
            c1_verdict(P1, env, g, d),
            v_verdict(P2, env, g, d, &[m]),
            Verdict::below(P3, nan_if(d.osc_upper), m, s, g.x(false), d.nu),
            Verdict::above(P4, nan_if(d.var_lower), math::pow(epsilon, 100.0) * m, s, g.x(true), d.nu),
            stretch_verdict(P5, env, g, d, epsilon, m / 6.0),
        ],
        Family::QJ { xi_prime, .. } => {
            let tx = math::pow(env.t, xi_prime);
            let mut q1 = c1_verdict(QJ1, env, g, d);
            let scaled = math::pow(env.t, 1.0 - xi_prime) * h;
            q1.value = scaled;
            q1.threshold = 1.0;
            if scaled > 1.0 {
                q1.pass = false;
                q1.margin = -f64::MIN_POSITIVE;
            }
            vec![
                qj0.unwrap_or(Verdict::flag(QJ0, true, 0.0, g.x(false), 0)),
                q1,
                Verdict::at_least(QJ2, nan_if(d.d1_min * h), tx, s, g.x(d.d1_witness.1), d.d1_witness.0),
                Verdict::at_most(QJ3, nan_if(d.d2_max * h), d.d1_min / tx, s, g.x(d.d2_witness.1), d.d2_witness.0),
            ]
        }
        Family::QP { m, xi } => {
            let m1 = math::pow(m, 1.0 - xi);
            vec![
                c1_verdict(QP1, env, g, d),
                v_verdict(QP2, env, g, d, &[m, math::pow(env.t, xi)]),
                Verdict::below(QP3, nan_if(d.osc_upper), m, s, g.x(false), d.nu),
                Verdict::above(QP4, nan_if(d.var_lower), m1, s, g.x(true), d.nu),
                stretch_verdict(QP5, env, g, d, 1.0 / m, m1 / 6.0),
            ]
        }
    }
}

/// (QJ0) at the left end, reading its hypothesis as "T^i x ∈ V_M for i ≤ M".
fn qj0_verdict(env: &Env, g: Geo, tu: &OrbitTable, j: i64, xi_prime: f64, epsilon: f64) -> Verdict {
    let base = math::ceil(math::pow(env.t, xi_prime)).max(2.0);
    let mut worst = Verdict::flag(Condition::QJ0, true, 0.0, g.x(false), 0);
    for k in 0..4 {
        let m = base * (1u64 << k) as f64;
        let mi = m as i64;
        match env.leaves_v(g.left, 1, m, 0, (mi + 1) as u64) {
            Ok(Some(_)) | Err(()) => continue, // hypothesis fails: vacuous
            Ok(None) => {}
        }
        let Some(s) = eval::sums(tu, j, mi) else { continue };
        let ratio = s[0] / (env.mean * m);
        let dev = (ratio - 1.0).abs();
        let v = Verdict::at_most(Condition::QJ0, dev, epsilon, env.cfg.slack, g.x(false), mi);
        if v.margin < worst.margin {
            worst = v;
        }
    }
    worst
}

/// Verdict order for "worst": smallest margin, NaN first, then atom order.
fn worse(a: &Verdict, ai: usize, b: &Verdict, bi: usize) -> bool {
    let key = |v: &Verdict| if v.margin.is_nan() { f64::NEG_INFINITY } else { v.margin };
    let (ka, kb) = (key(a), key(b));
    ka < kb || (ka == kb && ai < bi)
}

/// Per-condition worst verdicts with their atom index.
#[derive(Clone, Default)]
pub(crate) struct Worst(pub Vec<Option<(Verdict, usize)>>);

impl Worst {
    pub fn new(n: usize) -> Self {
        Worst(vec![None; n])
    }

    pub fn push(&mut self, idx: usize, vs: &[Verdict]) {
        for (w, v) in self.0.iter_mut().zip(vs) {
            if w.as_ref().is_none_or(|(x, xi)| worse(v, idx, x, *xi)) {
                *w = Some((*v, idx));
            }
        }
    }

    pub fn merge(&mut self, o: Worst) {
        for (w, v) in self.0.iter_mut().zip(o.0) {
            if let Some((v, vi)) = v {
                if w.as_ref().is_none_or(|(x, xi)| worse(&v, vi, x, *xi)) {
                    *w = Some((v, vi));
                }
            }
        }
    }
}

/// Bit c set when condition c passed; bit 31 when all passed.
pub(crate) const ALL: u32 = 1 << 31;

pub(crate) fn pass_bits(vs: &[Verdict]) -> u32 {
    let mut b = 0;
    for (c, v) in vs.iter().enumerate() {
        if v.pass {
            b |= 1 << c;
        }
    }
    if vs.iter().all(|v| v.pass) {
        b |= ALL;
    }
    b
}

pub(crate) fn record(g: Geo, d: &AtomData, vs: Vec<Verdict>) -> AtomRecord {
    let h = g.h();
    AtomRecord {
        left: g.left.to_f64(),
        length: h,
        n_min: d.n_min,
        n_max: d.n_max,
        stretch: d.d1_min * h,
        distortion: d.d2_max * h,
        monotone: d.monotone,
        verdicts: vs,
    }
}

/// Per-class partial result of a checking sweep.
pub(crate) struct ClassOut {
    pub bits: Vec<(usize, u32)>,
    pub worst: Worst,
    pub records: Vec<(usize, AtomRecord)>,
    pub error: Option<crate::error::Error>,
}

/// Folds per-class outcomes into summaries in atom order.
pub(crate) struct Folded {
    pub summaries: Vec<ConditionSummary>,
    pub records: Vec<AtomRecord>,
    pub passed: usize,
    pub total: usize,
    pub covered_passed: f64,
}

pub(crate) fn fold(conds: &[Condition], outs: Vec<ClassOut>, lengths: &[f64]) -> Result<Folded> {
    let n = lengths.len();
    let mut bits = vec![0u32; n];
    let mut worst = Worst::new(conds.len());
    let mut records = Vec::new();
    for o in outs {
        if let Some(e) = o.error {
            return Err(e);
        }
        for (i, b) in o.bits {
            bits[i] = b;
        }
        worst.merge(o.worst);
        records.extend(o.records);
    }
    records.sort_by_key(|r| r.0);
    let mut summaries: Vec<ConditionSummary> =
        conds.iter().zip(worst.0).map(|(&cond, w)| ConditionSummary { cond, passed: 0, failed: 0, worst: w.map(|x| x.0) }).collect();
    let mut acc = crate::dd::Accumulator::default();
    let mut passed = 0;
    for (i, &b) in bits.iter().enumerate() {
        for (c, s) in summaries.iter_mut().enumerate() {
            if b & (1 << c) != 0 {
                s.passed += 1;
            } else {
                s.failed += 1;
            }
        }
        if b & ALL != 0 {
            passed += 1;
            acc.push(lengths[i]);
        }
    }
    Ok(Folded { summaries, records: records.into_iter().map(|r| r.1).collect(), passed, total: n, covered_passed: acc.value() })
}

pub(crate) fn bracket_info(ctx: &AlphaContext, t: f64, kappa: f64) -> (usize, u128) {
    match denominator_bracket(t, ctx, 1.0 + kappa) {
        Ok(n) => (n, ctx.q[n]),
        Err(_) => (0, 1),
    }
}

/// Checks one condition family on every atom of a partition.
pub fn check_partition<E: Executor>(
    exec: &E,
    ctx: &AlphaContext,
    roof: &RoofFunction,
    partition: &AlmostPartition,
    t: f64,
    family: Family,
    cfg: &CheckConfig,
) -> Result<StretchReport> {
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    partition.check_disjoint()?;
    let kappa = cfg.kappa.eval(t);
    let (n, q_n) = bracket_info(ctx, t, kappa);
    let env = Env { ctx, roof, t, cfg, min_phi: roof.minimum().1, mean: roof.mean()? };
    let conds = family.conditions();
    let mut notes = Vec::new();
    if partition.is_empty() {
        notes.push(String::from("empty partition: conditions hold vacuously, covered = 0"));
    }
    let items: Vec<(CirclePoint, u128, i64)> = partition.atoms.iter().enumerate().map(|(i, a)| (a.left, a.len, partition.anchor(i))).collect();
    let cls = eval::classes(&items, ctx);
    let extra = match family {
        Family::QJ { xi_prime, .. } => 8.0 * math::pow(t, xi_prime) + 8.0,
        _ => 0.0,
    };
    let span = eval::span_for(roof, t, extra, cfg.n_window);
    let window = cfg.n_window;
    let brute = bruteforce_set(partition.len(), cfg.bruteforce_atoms);
    let limit = cfg.record_limit;
    let one = |_: &Class| 1u64;
    let outs = eval::sweep(
        exec,
        roof,
        ctx,
        &cls,
        &one,
        span,
        |class, _| ClassOut { bits: Vec::with_capacity(class.members.len()), worst: Worst::new(conds.len()), records: Vec::new(), error: None },
        |acc, class, mi, _, _, tables, j| {
            let idx = class.members[mi].0;
            let left = CirclePoint(class.offset).add(crate::arithmetic::orbit_point(CirclePoint::ZERO, j, ctx));
            let g = Geo { left, len: class.len };
            let (d, qj0) = match tables {
                Some((tu, tv)) => {
                    let d = eval::atom_data(tu, tv, j, g.h(), t, window);
                    let qj0 = match family {
                        Family::QJ { xi_prime, epsilon } => Some(qj0_verdict(&env, g, tu, j, xi_prime, epsilon)),
                        _ => None,
                    };
                    (d, qj0)
                }
                None => (AtomData::default(), None),
            };
            let mut vs = verdicts(&family, &env, g, &d, qj0);
            if brute.contains(&idx) {
                if let Err(e) = bruteforce_p5(&family, &env, g, &d, &mut vs) {
                    acc.error.get_or_insert(e);
                }
            }
            acc.bits.push((idx, pass_bits(&vs)));
            acc.worst.push(idx, &vs);
            if idx < limit {
                acc.records.push((idx, record(g, &d, vs)));
            }
        },
        |_, _, acc| acc,
    );
    let lengths: Vec<f64> = partition.atoms.iter().map(|a| a.length()).collect();
    let tally = fold(&conds, outs, &lengths)?;
    let mut parameters = family.parameters();
    parameters.push((String::from("kappa"), kappa));
    parameters.push((String::from("zeta"), cfg.zeta));
    parameters.push((String::from("slack"), cfg.slack));
    Ok(StretchReport {
        family: String::from(family.name()),
        t,
        kappa,
        n,
        q_n,
        parameters,
        atoms_total: tally.total,
        atoms_passed: tally.passed,
        pass_fraction: if tally.total > 0 { tally.passed as f64 / tally.total as f64 } else { 1.0 },
        covered: partition.covered,
        covered_passed: tally.covered_passed,
        defect: partition.defect(),
        empty: partition.is_empty(),
        summaries: tally.summaries,
        atoms: tally.records,
        ledger: Vec::new(),
        lower_bound: None,
        notes,
    })
}

fn bruteforce_set(n: usize, count: usize) -> Vec<usize> {
    if n == 0 || count == 0 {
        return Vec::new();
    }
    let c = count.min(n);
    let mut v: Vec<usize> = (0..c).map(|k| k * n / c).collect();
    v.dedup();
    v
}

/// Brute-force (ε, K)-uniform stretching of S_n on [a,b] and its two end
/// sub-intervals of relative length M^{−1/4}, for n at both ends of the range.
fn bruteforce_p5(fam: &Family, env: &Env, g: Geo, d: &AtomData, vs: &mut [Verdict]) -> Result<()> {
    let (m, eps, kf, cond) = match *fam {
        Family::P { m, epsilon } => (m, epsilon, m / 6.0, Condition::P5),
        Family::QP { m, xi } => (m, 1.0 / m, math::pow(m, 1.0 - xi) / 6.0, Condition::QP5),
        _ => return Ok(()),
    };
    let Some(slot) = vs.iter_mut().find(|v| v.cond == cond) else { return Ok(()) };
    if !d.ok || !slot.pass {
        return Ok(());
    }
    let frac = math::pow(m, -0.25).min(1.0);
    let subs = [(0.0, 1.0), (0.0, frac), (1.0 - frac, 1.0)];
    let samples = env.cfg.bruteforce_samples.max(1000);
    let mut ns = vec![d.n_min, d.n_max];
    ns.dedup();
    for &n in &ns {
        if n <= 0 {
            continue;
        }
        for &(c0, c1) in &subs {
            let mut vals = Vec::with_capacity(samples);
            for i in 0..samples {
                let f = c0 + (c1 - c0) * i as f64 / (samples - 1) as f64;
                let x = g.left.add(CirclePoint(crate::arithmetic::raw_length(f * g.h()).min(g.len - 1)));
                vals.push(birkhoff_sum(env.roof, Selector::Phi, x, n, env.ctx)?.value);
            }
            let k = kf * (c1 - c0) * (1.0 - env.cfg.slack);
            if !uniform_stretching_bruteforce(&vals, g.h() * (c1 - c0), eps * (1.0 + env.cfg.slack), k, 64)? {
                slot.pass = false;
                slot.margin = -f64::MIN_POSITIVE;
                slot.witness_n = n;
                return Ok(());
            }
        }
    }
    Ok(())
}

/// Convenience wrappers matching the condition lists.
pub fn check_j<E: Executor>(exec: &E, ctx: &AlphaContext, roof: &RoofFunction, p: &AlmostPartition, t: f64, k_of_t: f64, cfg: &CheckConfig) -> Result<StretchReport> {
    check_partition(exec, ctx, roof, p, t, Family::J { k: k_of_t }, cfg)
}

pub fn check_p<E: Executor>(exec: &E, ctx: &AlphaContext, roof: &RoofFunction, p: &AlmostPartition, t: f64, m: f64, epsilon: f64, cfg: &CheckConfig) -> Result<StretchReport> {
    check_partition(exec, ctx, roof, p, t, Family::P { m, epsilon }, cfg)
}

pub fn check_qj<E: Executor>(exec: &E, ctx: &AlphaContext, roof: &RoofFunction, p: &AlmostPartition, t: f64, xi_prime: f64, epsilon: f64, cfg: &CheckConfig) -> Result<StretchReport> {
    check_partition(exec, ctx, roof, p, t, Family::QJ { xi_prime, epsilon }, cfg)
}

pub fn check_qp<E: Executor>(exec: &E, ctx: &AlphaContext, roof: &RoofFunction, p: &AlmostPartition, t: f64, m: f64, xi: f64, cfg: &CheckConfig) -> Result<StretchReport> {
    check_partition(exec, ctx, roof, p, t, Family::QP { m, xi }, cfg)
}
