//! Per-atom certified quantities from orbit tables.
//!
//! An atom [u, v] is stored as an anchor i and offsets: u = R^{-i}(0) + δ_u.
//! Every atom sharing δ_u reads its sums from one table along the orbit of
//! δ_u. Between endpoints the estimates use Φ″ > 0 (S_NΦ convex, S_NΦ′
//! increasing) and the convexity of Φ″, valid as long as no orbit point
//! enters the atom, which J1/P1 check.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::arithmetic::{length_f64, orbit_point, AlphaContext, CirclePoint};
use crate::birkhoff::OrbitTable;
use crate::error::Result;

use crate::exec::Executor;
use crate::math;
use crate::roof::RoofFunction;

/// Sums S_N, S_NΦ′, S_NΦ″ at table index j, if covered.
#[inline]
pub(crate) fn sums(t: &OrbitTable, j: i64, n: i64) -> Option<[f64; 3]> {
    if !t.covers(j, j + n) {
        return None;
    }
    Some([t.sum_at(0, j, n), t.sum_at(1, j, n), t.sum_at(2, j, n)])
}

/// Lower bound for min over [0, h] of a convex f from values and slopes at both ends.
pub(crate) fn envelope(fu: f64, du: f64, fv: f64, dv: f64, h: f64) -> f64 {
    let g0 = fu.max(fv - dv * h);
    let gh = (fu + du * h).max(fv);
    let mut best = g0.min(gh);
    if du < dv {
        let x = (fv - dv * h - fu) / (du - dv);
        if x > 0.0 && x < h {
            best = best.min(fu + du * x);
        }
    }
    best - 1e-12 * (fu.abs() + fv.abs())
}

/// Everything the J/P/QJ/QP verdicts need about one atom.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct AtomData {
    /// N(u,t), N(v,t).
    pub nu: i64,
    pub nv: i64,
    /// Certified range of N(x,t) over the atom.
    pub n_min: i64,
    pub n_max: i64,
    /// False when the range exceeded the window or the table.
    pub ok: bool,
    /// min over N in range of min_y |S_NΦ′(y)|, with witness (N, at right end).
    pub d1_min: f64,
    pub d1_witness: (i64, bool),
    /// max over N in range of sup_y S_NΦ″(y).
    pub d2_max: f64,
    pub d2_witness: (i64, bool),
    /// S_NΦ′ keeps a strict sign on the atom for every N in range.
    pub monotone: bool,
    /// S_NΦ″ > 0 at both ends for every N in range.
    pub convex: bool,
    /// At N = N(u,t): certified upper bound of the oscillation of S_N and
    /// the lower bound |S_N(u) − S_N(v)| of sup_x |S_N(u) − S_N(x)|.
    pub osc_upper: f64,
    pub var_lower: f64,
    /// S_N(u)/N at N = N(u,t), for the ergodic window.
    pub birkhoff_u: f64,
}

pub(crate) fn atom_data(tu: &OrbitTable, tv: &OrbitTable, j: i64, h: f64, t: f64, window: i64) -> AtomData {
    let mut d = AtomData { ok: false, ..Default::default() };
    let (Some((nu, _)), Some((nv, _))) = (tu.hitting(j, 0.0, t), tv.hitting(j, 0.0, t)) else {
        return d;
    };
    d.nu = nu;
    d.nv = nv;
    d.n_min = nu.min(nv);
    let top = nu.max(nv);
    let mut n = top;
    loop {
        let (Some(a), Some(b)) = (sums(tu, j, n + 1), sums(tv, j, n + 1)) else {
            return d;
        };
        if envelope(a[0], a[1], b[0], b[1], h) > t {
            break;
        }
        n += 1;
        if n - top > window {
            d.n_max = n;
            return d;
        }
    }
    d.n_max = n;
    d.d1_min = f64::INFINITY;
    d.d2_max = 0.0;
    d.monotone = true;
    d.convex = true;
    for m in d.n_min..=d.n_max {
        let (Some(a), Some(b)) = (sums(tu, j, m), sums(tv, j, m)) else {
            return d;
        };
        let same = a[1] * b[1] > 0.0;
        d.monotone &= same;
        d.convex &= a[2] > 0.0 && b[2] > 0.0;
        let (d1, right) = if !same { (0.0, b[1].abs() < a[1].abs()) } else if b[1].abs() < a[1].abs() { (b[1].abs(), true) } else { (a[1].abs(), false) };
        if d1 < d.d1_min {
            d.d1_min = d1;
            d.d1_witness = (m, right);
        }
        let (d2, right2) = if b[2] > a[2] { (b[2], true) } else { (a[2], false) };
        if d2 > d.d2_max {
            d.d2_max = d2;
            d.d2_witness = (m, right2);
        }
        if m == nu {
            let (su, sv) = (a[0], b[0]);
            d.var_lower = (su - sv).abs();
            d.osc_upper = if same { d.var_lower } else { su.max(sv) - envelope(a[0], a[1], b[0], b[1], h) };
            d.birkhoff_u = if m > 0 { su / m as f64 } else { 1.0 };
        }
    }
    d.ok = true;
    d
}

/// Atoms grouped by (left offset, length): one class shares its tables.
pub(crate) struct Class {
    pub offset: u128,
    pub len: u128,
    /// (atom index, table index j = −anchor)
    pub members: Vec<(usize, i64)>,
}

pub(crate) fn classes(atoms: &[(CirclePoint, u128, i64)], ctx: &AlphaContext) -> Vec<Class> {
    let mut map: BTreeMap<(u128, u128), Vec<(usize, i64)>> = BTreeMap::new();
    for (idx, &(left, len, anchor)) in atoms.iter().enumerate() {
        // left = R^{-anchor}(0) + offset
        let offset = left.sub(orbit_point(CirclePoint::ZERO, -anchor, ctx)).0;
        map.entry((offset, len)).or_default().push((idx, -anchor));
    }
    map.into_iter().map(|((offset, len), members)| Class { offset, len, members }).collect()
}

/// Forward reach a table needs beyond its largest index.
pub(crate) fn span_for(roof: &RoofFunction, t: f64, extra: f64, window: i64) -> i64 {
    let (_, min_phi) = roof.minimum();
    let reach = (t / min_phi.max(1e-300)).max(extra);
    math::ceil(reach) as i64 + window + 64
}

/// Table along the orbit of `offset` covering every member.
pub(crate) fn class_table(roof: &RoofFunction, ctx: &AlphaContext, offset: u128, members: &[(usize, i64)], span: i64) -> Result<OrbitTable> {
    let lo = members.iter().map(|m| m.1).min().unwrap_or(0);
    let hi = members.iter().map(|m| m.1).max().unwrap_or(0);
    OrbitTable::build(roof, ctx, CirclePoint(offset), lo, hi + span, [true, true, true])
}

/// Length of the k-th of m equal pieces of a class atom, as offsets.
#[inline]
pub(crate) fn piece_offset(len: u128, k: u64, m: u64) -> u128 {
    // floor(len·k/m) without overflow
    let q = len / m as u128;
    let r = len % m as u128;
    q * k as u128 + (r * k as u128) / m as u128
}

/// Sweep every class: builds tables for consecutive piece offsets and
/// folds each (member, piece) into a per-class accumulator. Tables are
/// `None` when an endpoint orbit comes too close to the singularity.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sweep<E, A, B, I, F, Z>(
    exec: &E,
    roof: &RoofFunction,
    ctx: &AlphaContext,
    cls: &[Class],
    pieces: &(dyn Fn(&Class) -> u64 + Sync),
    span: i64,
    init: I,
    f: F,
    finish: Z,
) -> Vec<B>
where
    E: Executor,
    B: Send,
    I: Fn(&Class, u64) -> A + Sync + Send,
    F: Fn(&mut A, &Class, usize, u64, u64, Option<(&OrbitTable, &OrbitTable)>, i64) + Sync + Send,
    Z: Fn(&Class, u64, A) -> B + Sync + Send,
{
    exec.map(cls.len(), |c| {
        let class = &cls[c];
        let m = pieces(class).max(1);
        let mut acc = init(class, m);
        let table = |k: u64| class_table(roof, ctx, class.offset.wrapping_add(piece_offset(class.len, k, m)), &class.members, span).ok();
        let mut left = table(0);
        for k in 0..m {
            let right = table(k + 1);
            let pair = match (&left, &right) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => None,
            };
            for (mi, &(_, j)) in class.members.iter().enumerate() {
                f(&mut acc, class, mi, k, m, pair, j);
            }
            left = right;
        }
        finish(class, m, acc)
    })
}

/// Piece length in circle units.
pub(crate) fn piece_len(class: &Class, k: u64, m: u64) -> (u128, u128, f64) {
    let a = piece_offset(class.len, k, m);
    let b = piece_offset(class.len, k + 1, m);
    (a, b - a, length_f64(b - a))
}
