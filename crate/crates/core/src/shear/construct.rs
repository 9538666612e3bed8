//! The stretching-partition construction: preliminary partition by an
//! orbit segment of 0, then per-atom refinement into short pieces on which
//! the Birkhoff sums of Φ′ are large and nearly constant.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::check::{self, CheckConfig, Env, Family, Geo, LowerBound, Loss, StretchReport};
use super::eval::{self, Class};
use super::partition::{AlmostPartition, CircleInterval};
use crate::arithmetic::{denominator_bracket, interior_hit, length_f64, orbit_point, raw_length, AlphaContext, CirclePoint};
use crate::birkhoff::{hitting_count, Kappa};
use crate::dd::Accumulator;
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::math;
use crate::roof::RoofFunction;

/// Exponents of the construction. Defaults are the proof's values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearParams {
    pub kappa: Kappa,
    /// R1 iff κ^{branch_exp}·q_{n+1} ≤ q_n.
    pub branch_exp: f64,
    /// Boundary trim and J-gap radius ε^{trim_exp}.
    pub trim_exp: f64,
    /// Short-atom discard threshold k ≤ ε^{short_exp} q_{n+1}/q_n.
    pub short_exp: f64,
    /// Radius ε^{bad_exp}/q of the excluded neighbourhoods.
    pub bad_exp: f64,
    /// R1 sub-refinement scale ε^{refine_exp}/q_n.
    pub refine_exp: f64,
    /// Pieces of size q^{−(1+γ·piece_exp)}.
    pub piece_exp: f64,
    /// K(t) = q_n^{γ·k_exp}.
    pub k_exp: f64,
    pub n_window: i64,
    pub max_atoms: usize,
    pub record_limit: usize,
}

impl Default for ShearParams {
    fn default() -> Self {
        ShearParams {
            kappa: Kappa::LogLog,
            branch_exp: 0.1,
            trim_exp: 5.0,
            short_exp: 10.0,
            bad_exp: 100.0,
            refine_exp: 200.0,
            piece_exp: 0.5,
            k_exp: 0.25,
            n_window: 256,
            max_atoms: 50_000_000,
            record_limit: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    R1,
    R2a,
    R2b,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preliminary {
    pub partition: AlmostPartition,
    pub branch: Branch,
    pub t: f64,
    pub epsilon: f64,
    pub kappa: f64,
    /// s = (1 + κ)t.
    pub s: f64,
    pub n: usize,
    pub q_n: u128,
    pub q_next: u128,
    /// R2: smallest k with k·q_n > s (0 in R1).
    pub k: u64,
    /// Number of orbit points cutting the circle.
    pub points: u64,
    pub losses: Vec<Loss>,
    /// 1 minus the construction's own bound on the discarded measure.
    pub paper_bound: f64,
    /// Atoms with 0 ∈ R^m I for some m ≤ s; zero by construction.
    pub ndis_violations: usize,
    /// Trimmed length of the short atoms (R2b piece sizing), 0 if none.
    pub short_len_max: u128,
    pub params: ShearParams,
}

fn loss(reason: &str, measure: f64, atoms: usize) -> Loss {
    Loss { reason: String::from(reason), measure, atoms }
}

/// K(t) = q_n^{γ·k_exp} with n the bracket of (1+κ(t))t.
pub fn k_of_t(ctx: &AlphaContext, roof: &RoofFunction, t: f64, params: &ShearParams) -> Result<f64> {
    let kappa = params.kappa.eval(t);
    let n = denominator_bracket(t, ctx, 1.0 + kappa)?;
    Ok(math::pow(ctx.qf(n), roof.v_exponent() * params.k_exp))
}

/// Cuts T by {−iα : 0 ≤ i < P} and applies the R1/R2 rules.
pub fn build_preliminary_partition(ctx: &AlphaContext, t: f64, epsilon: f64, params: &ShearParams) -> Result<Preliminary> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", format!("must lie in (0,1), got {epsilon}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", "must be positive and finite"));
    }
    let e = |p: f64| math::pow(epsilon, p);
    let kappa = params.kappa.eval(t);
    let s = (1.0 + kappa) * t;
    let n = denominator_bracket(t, ctx, 1.0 + kappa)?;
    if n < 3 {
        return Err(Error::TooSmall { t, n });
    }
    let (q_n, q_next) = (ctx.q[n], ctx.q[n + 1]);
    let (qn, qn1) = (q_n as f64, q_next as f64);
    let (branch, points, k) = if math::pow(kappa, params.branch_exp) * qn1 <= qn {
        (Branch::R1, q_next, 0u64)
    } else {
        let k = math::floor(s / qn) as u64 + 1;
        let kn = (k as u128).saturating_mul(q_n).min(q_next);
        let b = if kn == q_next {
            Branch::R2b
        } else if (k as f64) <= e(params.short_exp) * qn1 / qn {
            Branch::R2a
        } else {
            Branch::R2b
        };
        (b, kn, k)
    };
    if points as usize > params.max_atoms {
        return Err(Error::PrecisionExhausted(format!("{points} orbit points exceed max_atoms = {}", params.max_atoms)));
    }
    // sorted cut points with their orbit index
    let mut cuts: Vec<(u128, u64)> = Vec::with_capacity(points as usize);
    let mut y = 0u128;
    for i in 0..points as u64 {
        cuts.push((y, i));
        y = y.wrapping_sub(ctx.alpha);
    }
    cuts.sort_unstable();
    let p = cuts.len();
    // (left, len, anchor, right index)
    let mut atoms: Vec<(u128, u128, u64, u64)> = (0..p)
        .map(|r| {
            let (l, i) = cuts[r];
            let (rt, ri) = cuts[(r + 1) % p];
            (l, rt.wrapping_sub(l), i, ri)
        })
        .collect();
    drop(cuts);
    let min_len = atoms.iter().map(|a| a.1).min().unwrap_or(0);
    let mut losses = Vec::new();
    let mut paper_loss = 0.0;
    let mut short_raw = 0u128;
    match branch {
        Branch::R2a => {
            let before = atoms.len();
            let m = measure(atoms.iter().filter(|a| a.1 == min_len).map(|a| a.1));
            atoms.retain(|a| a.1 != min_len);
            losses.push(loss("short atoms", m, before - atoms.len()));
            paper_loss += 2.0 * e(params.short_exp);
        }
        Branch::R2b => {
            short_raw = min_len;
            if points < q_next {
                let kq = k as f64 * qn;
                let lo = math::ceil((1.0 - e(params.trim_exp)) * kq) as u64;
                let before = atoms.len();
                let m = measure(atoms.iter().filter(|a| a.3 >= lo).map(|a| a.1));
                atoms.retain(|a| a.3 < lo);
                losses.push(loss("right endpoint index near k q_n", m, before - atoms.len()));
                let thr = raw_length((e(params.trim_exp) / qn).min(0.5));
                let before = atoms.len();
                let m = measure(atoms.iter().filter(|a| a.1 != min_len && a.1 <= thr).map(|a| a.1));
                atoms.retain(|a| a.1 == min_len || a.1 > thr);
                losses.push(loss("long atoms shorter than eps^5/q_n", m, before - atoms.len()));
                paper_loss += 3.0 * e(params.trim_exp);
            }
        }
        Branch::R1 => {
            if qn1 < 2.0 * qn / e(params.refine_exp) {
                let target = e(params.refine_exp) / qn;
                let raw = raw_length(target.min(0.5));
                if raw < 2 {
                    return Err(Error::PrecisionExhausted(format!("sub-refinement length {target:e} is below the lattice resolution")));
                }
                let total: u128 = atoms.iter().map(|a| (a.1 / raw).max(1)).sum();
                if total > params.max_atoms as u128 {
                    return Err(Error::PrecisionExhausted(format!("sub-refinement needs {total} atoms (max_atoms = {})", params.max_atoms)));
                }
                let mut out = Vec::with_capacity(total as usize);
                for a in &atoms {
                    let m = (a.1 / raw).max(1) as u64;
                    for kk in 0..m {
                        let o = eval::piece_offset(a.1, kk, m);
                        let l = eval::piece_offset(a.1, kk + 1, m) - o;
                        out.push((a.0.wrapping_add(o), l, a.2, a.3));
                    }
                }
                atoms = out;
            }
        }
    }
    // boundary trim
    let f5 = e(params.trim_exp);
    let mut trim = Accumulator::default();
    let mut out = Vec::with_capacity(atoms.len());
    let mut anchors = Vec::with_capacity(atoms.len());
    for a in &atoms {
        let tr = (a.1 as f64 * f5) as u128;
        let len = a.1 - 2 * tr;
        if len == 0 {
            trim.push(length_f64(a.1));
            continue;
        }
        trim.push(length_f64(2 * tr));
        out.push(CircleInterval { left: CirclePoint(a.0.wrapping_add(tr)), len });
        anchors.push(a.2 as i64);
    }
    losses.push(loss("boundary trim", trim.value(), 0));
    paper_loss += 2.0 * f5;
    if short_raw > 0 {
        short_raw -= 2 * ((short_raw as f64 * f5) as u128);
    }
    let horizon = math::floor(s) as u64 + 1;
    let ndis_violations = out.iter().filter(|a| interior_hit(a.left, a.len, 0, horizon, ctx).is_some()).count();
    let partition = AlmostPartition::measured(out, Some(anchors))?;
    Ok(Preliminary {
        partition,
        branch,
        t,
        epsilon,
        kappa,
        s,
        n,
        q_n,
        q_next,
        k,
        points: points as u64,
        losses,
        paper_bound: 1.0 - paper_loss,
        ndis_violations,
        short_len_max: short_raw,
        params: *params,
    })
}

fn measure(it: impl Iterator<Item = u128>) -> f64 {
    let mut a = Accumulator::default();
    for l in it {
        a.push(length_f64(l));
    }
    a.value()
}

/// Values at one piece endpoint at time floor(s).
#[derive(Clone, Copy, Default)]
struct End {
    d1: f64,
    d2: f64,
    erg: bool,
}

#[derive(Clone, Copy, Default)]
struct PieceOut {
    ok: bool,
    pass: bool,
    d1_min: f64,
}

/// Per-class fold of the refinement sweep.
struct Acc {
    /// [member][endpoint]
    ends: Vec<Vec<End>>,
    /// [member][piece]
    pieces: Vec<Vec<PieceOut>>,
}

/// Kept pieces and losses of one class.
#[derive(Default)]
struct ClassResult {
    kept: Vec<(CircleInterval, i64, f64)>,
    erg: (f64, usize),
    bad: (f64, usize),
    convexity: (f64, usize),
    gap: f64,
    failed: (f64, usize),
}

/// The refined partition with its J-report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub partition: AlmostPartition,
    pub report: StretchReport,
    pub k_of_t: f64,
}

/// Erg filter, B exclusion, central gap removal and subdivision into
/// pieces; pieces failing (J1)–(J3) at K(t) are dropped.
pub fn refine_to_stretching<E: Executor>(exec: &E, ctx: &AlphaContext, roof: &RoofFunction, prelim: &Preliminary) -> Result<Refined> {
    roof.validate()?;
    let params = &prelim.params;
    let (t, eps, kappa, s, n) = (prelim.t, prelim.epsilon, prelim.kappa, prelim.s, prelim.n);
    let gamma = roof.v_exponent();
    let k_t = math::pow(prelim.q_n as f64, gamma * params.k_exp);
    let family = Family::J { k: k_t };
    let cfg = CheckConfig { kappa: params.kappa, n_window: params.n_window, record_limit: params.record_limit, ..CheckConfig::default() };
    let mean = roof.mean()?;
    let env = Env { ctx, roof, t, cfg: &cfg, min_phi: roof.minimum().1, mean };
    let ns = math::floor(s) as i64;
    let kappa_n = params.kappa.eval(ns as f64);
    let erg_band = kappa_n * kappa_n;
    let f5 = math::pow(eps, params.trim_exp);
    let part = &prelim.partition;
    let items: Vec<(CirclePoint, u128, i64)> = part.atoms.iter().enumerate().map(|(i, a)| (a.left, a.len, part.anchor(i))).collect();
    let cls = eval::classes(&items, ctx);
    let span = eval::span_for(roof, t, s, params.n_window);
    let pieces = |c: &Class| {
        let q = if prelim.branch == Branch::R2b && c.len <= prelim.short_len_max { prelim.q_next } else { prelim.q_n } as f64;
        let h = math::pow(q, -(1.0 + gamma * params.piece_exp));
        let m = math::floor(length_f64(c.len) / h + 0.5).max(1.0);
        (m as u64).min((c.len / 2).max(1) as u64)
    };
    let bad = BadSet::new(ctx, t, s, kappa, eps, params, n);
    let window = params.n_window;
    let results = eval::sweep(
        exec,
        roof,
        ctx,
        &cls,
        &pieces,
        span,
        |c, m| Acc {
            ends: (0..c.members.len()).map(|_| Vec::with_capacity(m as usize + 1)).collect(),
            pieces: (0..c.members.len()).map(|_| Vec::with_capacity(m as usize)).collect(),
        },
        |acc, c, mi, k, m, tables, j| {
            let (po, plen, h) = eval::piece_len(c, k, m);
            let left = CirclePoint(c.offset.wrapping_add(po)).add(orbit_point(CirclePoint::ZERO, j, ctx));
            let g = Geo { left, len: plen };
            let Some((tu, tv)) = tables else {
                if k == 0 {
                    acc.ends[mi].push(End::default());
                }
                acc.ends[mi].push(End::default());
                acc.pieces[mi].push(PieceOut::default());
                return;
            };
            let end = |tb: &crate::birkhoff::OrbitTable| match eval::sums(tb, j, ns) {
                Some(v) => End { d1: v[1], d2: v[2], erg: (v[0] / (ns as f64 * mean) - 1.0).abs() < erg_band },
                None => End::default(),
            };
            if k == 0 {
                acc.ends[mi].push(end(tu));
            }
            acc.ends[mi].push(end(tv));
            let d = eval::atom_data(tu, tv, j, h, t, window);
            let vs = check::verdicts(&family, &env, g, &d, None);
            acc.pieces[mi].push(PieceOut { ok: d.ok, pass: vs.iter().all(|v| v.pass), d1_min: d.d1_min });
        },
        |c, m, acc| {
            let mut r = ClassResult::default();
            let total = length_f64(c.len);
            for (mi, &(_, j)) in c.members.iter().enumerate() {
                let (ends, ps) = (&acc.ends[mi], &acc.pieces[mi]);
                let atom_left = CirclePoint(c.offset).add(orbit_point(CirclePoint::ZERO, j, ctx));
                if !ends.iter().any(|e| e.erg) {
                    r.erg.0 += total;
                    r.erg.1 += 1;
                    continue;
                }
                if bad.contains(atom_left, c.len) {
                    r.bad.0 += total;
                    r.bad.1 += 1;
                    continue;
                }
                // S_sΦ′ increasing and S_sΦ″ > 0, checked at the endpoints
                let convex = ends.iter().all(|e| e.d2 > 0.0) && ends.windows(2).all(|w| w[0].d1 <= w[1].d1);
                if !convex {
                    r.convexity.0 += total;
                    r.convexity.1 += 1;
                    continue;
                }
                let off = |k: u64| length_f64(eval::piece_offset(c.len, k, m));
                let (xl, xr) = locate_min(ends, &off, m, total);
                let (gl, gr) = (xl - f5 * total, xr + f5 * total);
                for (k, p) in ps.iter().enumerate() {
                    let (a, b) = (off(k as u64), off(k as u64 + 1));
                    if b > gl && a < gr {
                        r.gap += b - a;
                        continue;
                    }
                    if !(p.ok && p.pass) {
                        r.failed.0 += b - a;
                        r.failed.1 += 1;
                        continue;
                    }
                    let (po, plen, _) = eval::piece_len(c, k as u64, m);
                    let left = CirclePoint(c.offset.wrapping_add(po)).add(orbit_point(CirclePoint::ZERO, j, ctx));
                    r.kept.push((CircleInterval { left, len: plen }, -j, p.d1_min));
                }
            }
            r
        },
    );
    let mut kept = Vec::new();
    let mut anchors = Vec::new();
    let mut ledger = prelim.losses.clone();
    let (mut erg, mut badl, mut conv, mut gap, mut failed) = ((0.0, 0), (0.0, 0), (0.0, 0), 0.0, (0.0, 0));
    let lb = lboun(prelim, gamma, kappa, eps);
    let mut lower = LowerBound { bound: lb, measured_min: f64::INFINITY, atoms_meeting: 0, atoms: 0 };
    for r in results {
        erg = (erg.0 + r.erg.0, erg.1 + r.erg.1);
        badl = (badl.0 + r.bad.0, badl.1 + r.bad.1);
        conv = (conv.0 + r.convexity.0, conv.1 + r.convexity.1);
        gap += r.gap;
        failed = (failed.0 + r.failed.0, failed.1 + r.failed.1);
        for (a, anchor, d1) in r.kept {
            lower.atoms += 1;
            lower.measured_min = lower.measured_min.min(d1);
            if d1 >= lb {
                lower.atoms_meeting += 1;
            }
            kept.push(a);
            anchors.push(anchor);
        }
    }
    ledger.push(loss("outside Erg(kappa)", erg.0, erg.1));
    ledger.push(loss("inside B", badl.0, badl.1));
    ledger.push(loss("S_s Phi'' not positive or S_s Phi' not increasing", conv.0, conv.1));
    ledger.push(loss("central gap J", gap, 0));
    ledger.push(loss("pieces failing J1-J3", failed.0, failed.1));
    let partition = AlmostPartition::measured(kept, Some(anchors))?;
    let mut report = check::check_partition(exec, ctx, roof, &partition, t, family, &cfg)?;
    report.ledger = ledger;
    report.lower_bound = Some(lower);
    report.parameters.push((String::from("epsilon"), eps));
    report.parameters.push((String::from("gamma"), gamma));
    if roof.is_constant() {
        report.notes.push(String::from("no stretch: S_N Phi' vanishes identically for a constant roof"));
    }
    report.notes.push(format!("branch {:?}, {} preliminary atoms, covered {:.6} (target 1 - eps^2 = {:.6})", prelim.branch, part.len(), partition.covered, 1.0 - eps * eps));
    Ok(Refined { partition, report, k_of_t: k_t })
}

/// Location [xl, xr] (offsets from the atom's left end) of the minimum of
/// |S_sΦ′| on the atom, from endpoint values of an increasing function.
fn locate_min(ends: &[End], off: &dyn Fn(u64) -> f64, m: u64, total: f64) -> (f64, f64) {
    if ends[0].d1 >= 0.0 {
        return (0.0, 0.0);
    }
    if ends[m as usize].d1 <= 0.0 {
        return (total, total);
    }
    let k = ends.windows(2).position(|w| w[0].d1 < 0.0 && w[1].d1 >= 0.0).unwrap_or(0);
    let (a, b) = (off(k as u64), off(k as u64 + 1));
    let (ea, eb) = (ends[k], ends[k + 1]);
    let sup2 = ea.d2.max(eb.d2);
    if !(sup2 > 0.0) {
        return (a, b);
    }
    let xl = (a + ea.d1.abs() / sup2).min(b);
    let xr = (b - eb.d1 / sup2).max(xl);
    (xl, xr)
}

/// Measured counterpart of the construction's lower bound on |S_{N(y,t)}Φ′|.
fn lboun(p: &Preliminary, gamma: f64, kappa: f64, eps: f64) -> f64 {
    let e8 = math::pow(eps, 8.0);
    let (qn, qn1) = (p.q_n as f64, p.q_next as f64);
    match p.branch {
        Branch::R1 => math::pow(qn, 1.0 + gamma) * kappa,
        Branch::R2a => e8 * p.k as f64 * math::pow(qn, 1.0 + gamma),
        Branch::R2b => e8 * math::pow(qn1, 1.0 + gamma).min(p.k as f64 * math::pow(qn, 1.0 + gamma)),
    }
}

/// B = B₁ ∪ B₂: neighbourhoods of radius ε^{bad_exp}/q of the points
/// (i − ⌊s⌋)α, i ∈ [−q, q), for q = q_ℓ, q_{ℓ+1} with q_ℓ ≤ 2κt ≤ q_{ℓ+1}.
struct BadSet<'a> {
    ctx: &'a AlphaContext,
    s: i64,
    parts: Vec<(u128, u128)>,
}

impl<'a> BadSet<'a> {
    fn new(ctx: &'a AlphaContext, t: f64, s: f64, kappa: f64, eps: f64, params: &ShearParams, n: usize) -> Self {
        let mut parts = Vec::new();
        if let Ok(l) = denominator_bracket(2.0 * kappa * t, ctx, 1.0) {
            if l < n {
                for q in [ctx.q[l], ctx.q[l + 1]] {
                    parts.push((q, raw_length((math::pow(eps, params.bad_exp) / q as f64).min(0.25))));
                }
            }
        }
        BadSet { ctx, s: math::floor(s) as i64, parts }
    }

    /// Atom [left, left + len) contained in one of the neighbourhoods.
    fn contains(&self, left: CirclePoint, len: u128) -> bool {
        self.parts.iter().any(|&(q, r)| {
            if len > 2 * r {
                return false;
            }
            // a centre c = −mα with c ∈ [left + len − r, left + r], m = s − i
            let lo = CirclePoint(left.0.wrapping_add(len).wrapping_sub(r).wrapping_sub(1));
            let width = 2 * r - len + 2;
            let q = q as i64;
            interior_hit(lo, width, self.s - q + 1, 2 * q as u64, self.ctx).is_some()
        })
    }
}

/// Splits each atom of a J-partition at the points where N(·, t) has moved
/// by ⌈M/2⌉ from the previous cut, drops the remainder piece at the right
/// end and the pieces failing (P2). Meant for small t.
pub fn p_partition<E: Executor>(exec: &E, ctx: &AlphaContext, roof: &RoofFunction, j_partition: &AlmostPartition, t: f64, m: f64, cfg: &CheckConfig) -> Result<(AlmostPartition, Vec<Loss>)> {
    if !(m >= 2.0) {
        return Err(invalid("M", "must be at least 2"));
    }
    let step = math::ceil(m / 2.0) as i64;
    let n_of = |x: CirclePoint| hitting_count(roof, ctx, x, 0.0, t).map(|r| r.0);
    let out = exec.map(j_partition.len(), |i| -> Result<(Vec<CircleInterval>, f64)> {
        let a = j_partition.atoms[i];
        let mut pieces = Vec::new();
        let mut start = 0u128;
        let mut n0 = n_of(a.left)?;
        loop {
            // smallest offset x in (start, len] with |N(x) − n0| ≥ step
            let reach = |x: u128| -> Result<bool> { Ok((n_of(a.at(x.min(a.len - 1)))? - n0).abs() >= step) };
            if !reach(a.len - 1)? {
                break;
            }
            let (mut lo, mut hi) = (start, a.len - 1);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if reach(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            pieces.push(CircleInterval { left: a.at(start), len: hi - start });
            start = hi;
            n0 = n_of(a.at(start))?;
        }
        Ok((pieces, length_f64(a.len - start)))
    });
    let mut atoms = Vec::new();
    let mut rem = (0.0, 0usize);
    for o in out {
        let (p, r) = o?;
        atoms.extend(p);
        rem.0 += r;
        rem.1 += 1;
    }
    let candidate = AlmostPartition::measured(atoms, None)?;
    let rep = check::check_partition(exec, ctx, roof, &candidate, t, Family::P { m, epsilon: 0.5 }, &CheckConfig { record_limit: usize::MAX, bruteforce_atoms: 0, ..*cfg })?;
    let mut kept = Vec::new();
    let mut dropped = (0.0, 0usize);
    for (a, r) in candidate.atoms.iter().zip(&rep.atoms) {
        let p2 = r.verdicts.iter().find(|v| v.cond == check::Condition::P2).is_some_and(|v| v.pass);
        if p2 {
            kept.push(*a);
        } else {
            dropped.0 += a.length();
            dropped.1 += 1;
        }
    }
    let losses = alloc::vec![loss("remainder piece I_b", rem.0, rem.1), loss("leaves V_M (not good)", dropped.0, dropped.1)];
    Ok((AlmostPartition::measured(kept, None)?, losses))
}
