//! Circle intervals and almost partitions, with exact lattice arithmetic.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::arithmetic::{length_f64, raw_length, CirclePoint};
use crate::dd::Accumulator;
use crate::error::{invalid, Error, Result};

/// The half-open arc [left, left + len) on the 2^128 lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CircleInterval {
    pub left: CirclePoint,
    pub len: u128,
}

impl CircleInterval {
    pub fn new(left: CirclePoint, len: u128) -> Result<Self> {
        if len == 0 {
            return Err(invalid("length", "interval length must be positive"));
        }
        Ok(CircleInterval { left, len })
    }

    pub fn from_f64(left: f64, length: f64) -> Result<Self> {
        if !(length > 0.0 && length < 1.0) {
            return Err(invalid("length", format!("must lie in (0,1), got {length}")));
        }
        CircleInterval::new(CirclePoint::from_f64(left), raw_length(length))
    }

    pub fn length(&self) -> f64 {
        length_f64(self.len)
    }

    /// Exclusive right end.
    pub fn right(&self) -> CirclePoint {
        CirclePoint(self.left.0.wrapping_add(self.len))
    }

    pub fn contains(&self, x: CirclePoint) -> bool {
        x.sub(self.left).0 < self.len
    }

    /// Point at offset `raw` from the left end.
    pub fn at(&self, raw: u128) -> CirclePoint {
        CirclePoint(self.left.0.wrapping_add(raw))
    }

    /// One or two inclusive segments [s, e] of [0, 2^128 − 1].
    pub(crate) fn segments(&self) -> ([(u128, u128); 2], usize) {
        let s = self.left.0;
        let last = self.len - 1;
        match s.checked_add(last) {
            Some(e) => ([(s, e), (0, 0)], 1),
            None => ([(s, u128::MAX), (0, s.wrapping_add(last))], 2),
        }
    }
}

/// A disjoint family of arcs with a declared defect bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostPartition {
    pub atoms: Vec<CircleInterval>,
    /// When present, atom i starts at R^{-anchors[i]}(0) + offset. Atoms
    /// sharing (offset, length) share orbit tables in the checkers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<i64>>,
    pub epsilon: f64,
    pub covered: f64,
}

impl AlmostPartition {
    pub fn new(atoms: Vec<CircleInterval>, epsilon: f64) -> Result<Self> {
        Self::build(atoms, None, epsilon)
    }

    pub fn with_anchors(atoms: Vec<CircleInterval>, anchors: Vec<i64>, epsilon: f64) -> Result<Self> {
        if anchors.len() != atoms.len() {
            return Err(invalid("anchors", "one anchor per atom"));
        }
        Self::build(atoms, Some(anchors), epsilon)
    }

    /// Partition whose epsilon is its own measured defect.
    pub fn measured(atoms: Vec<CircleInterval>, anchors: Option<Vec<i64>>) -> Result<Self> {
        let mut p = Self::build(atoms, anchors, 1.0)?;
        p.epsilon = (1.0 - p.covered).max(0.0);
        Ok(p)
    }

    pub fn empty() -> Self {
        AlmostPartition { atoms: Vec::new(), anchors: None, epsilon: 1.0, covered: 0.0 }
    }

    fn build(atoms: Vec<CircleInterval>, anchors: Option<Vec<i64>>, epsilon: f64) -> Result<Self> {
        let (atoms, anchors) = match anchors {
            Some(a) => {
                let mut pairs: Vec<(CircleInterval, i64)> = atoms.into_iter().zip(a).collect();
                pairs.sort_by_key(|p| p.0.left);
                let (x, y): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
                (x, Some(y))
            }
            None => {
                let mut x = atoms;
                x.sort_by_key(|a| a.left);
                (x, None)
            }
        };
        let covered = total_length(&atoms);
        let p = AlmostPartition { atoms, anchors, epsilon, covered };
        p.check_disjoint()?;
        p.check_defect()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn defect(&self) -> f64 {
        (1.0 - self.covered).max(0.0)
    }

    pub fn anchor(&self, i: usize) -> i64 {
        self.anchors.as_ref().map_or(0, |a| a[i])
    }

    /// Sweep over the sorted atoms; only the last one may wrap past 0.
    pub fn check_disjoint(&self) -> Result<()> {
        let a = &self.atoms;
        for w in a.windows(2) {
            if w[1].left < w[0].left {
                return Err(Error::Precondition("atoms are not sorted".into()));
            }
            match w[0].left.0.checked_add(w[0].len) {
                Some(end) if end <= w[1].left.0 => {}
                _ => {
                    return Err(Error::Precondition(format!(
                        "atoms overlap near {}",
                        w[1].left.to_f64()
                    )))
                }
            }
        }
        if let (Some(first), Some(last)) = (a.first(), a.last()) {
            if last.left.0.checked_add(last.len).is_none() {
                let end = last.left.0.wrapping_add(last.len);
                if end > first.left.0 {
                    return Err(Error::Precondition("wrapping atom overlaps the first atom".into()));
                }
            }
        }
        Ok(())
    }

    fn check_defect(&self) -> Result<()> {
        if self.covered + 1e-12 < 1.0 - self.epsilon {
            return Err(Error::Precondition(format!(
                "covered {} < 1 - epsilon = {}",
                self.covered,
                1.0 - self.epsilon
            )));
        }
        Ok(())
    }

    /// Both invariants.
    pub fn verify(&self) -> Result<()> {
        self.check_disjoint()?;
        self.check_defect()
    }
}

pub(crate) fn total_length(atoms: &[CircleInterval]) -> f64 {
    let mut acc = Accumulator::default();
    for a in atoms {
        acc.push(a.length());
    }
    acc.value()
}

/// All nonempty P_a ∩ Q_b as (a, b, piece). A pair whose intersection
/// wraps through 0 yields a single piece.
pub(crate) fn pairwise_intersections(p: &[CircleInterval], q: &[CircleInterval]) -> Vec<(usize, usize, CircleInterval)> {
    let segs = |atoms: &[CircleInterval]| {
        let mut v: Vec<(u128, u128, usize)> = Vec::with_capacity(atoms.len() + 1);
        for (i, a) in atoms.iter().enumerate() {
            let (s, k) = a.segments();
            for seg in &s[..k] {
                v.push((seg.0, seg.1, i));
            }
        }
        v.sort();
        v
    };
    let (sp, sq) = (segs(p), segs(q));
    let mut raw: Vec<(usize, usize, u128, u128)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < sp.len() && j < sq.len() {
        let (a, b) = (sp[i], sq[j]);
        let lo = a.0.max(b.0);
        let hi = a.1.min(b.1);
        if lo <= hi {
            raw.push((a.2, b.2, lo, hi));
        }
        if a.1 < b.1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    // join the two halves of a pair that wraps through 0
    let mut by_pair: BTreeMap<(usize, usize), Vec<(u128, u128)>> = BTreeMap::new();
    for (a, b, lo, hi) in raw {
        by_pair.entry((a, b)).or_default().push((lo, hi));
    }
    let mut out = Vec::new();
    for ((a, b), mut pieces) in by_pair {
        pieces.sort();
        if pieces.len() >= 2 && pieces[0].0 == 0 && pieces[pieces.len() - 1].1 == u128::MAX {
            let head = pieces.remove(0);
            let tail = pieces.pop().unwrap();
            let len = (u128::MAX - tail.0) + 1 + head.1 + 1;
            out.push((a, b, CircleInterval { left: CirclePoint(tail.0), len }));
        }
        for (lo, hi) in pieces {
            out.push((a, b, CircleInterval { left: CirclePoint(lo), len: hi - lo + 1 }));
        }
    }
    out
}

/// {P_a ∩ Q_b}; the result is a (ε_P + ε_Q)-almost partition.
pub fn intersect_almost_partitions(p: &AlmostPartition, q: &AlmostPartition) -> Result<AlmostPartition> {
    let atoms: Vec<CircleInterval> = pairwise_intersections(&p.atoms, &q.atoms).into_iter().map(|x| x.2).collect();
    AlmostPartition::new(atoms, (p.epsilon + q.epsilon).min(1.0))
}

/// Measured outcome of a combinatorial refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub partition: AlmostPartition,
    pub delta: f64,
    pub epsilon0: f64,
    pub bound: f64,
}

/// Keeps P_i ∩ Q_j only when its length exceeds ε₀·min(|P_i|, |Q_j|) and
/// checks covered > (1 − 4√δ)(1 − 3ε₀) with δ the larger defect.
pub fn combinatorial_refinement(p: &AlmostPartition, q: &AlmostPartition, epsilon0: f64) -> Result<Refinement> {
    if !(0.0..1.0).contains(&epsilon0) {
        return Err(invalid("epsilon0", format!("must lie in [0,1), got {epsilon0}")));
    }
    let delta = p.defect().max(q.defect());
    let mut kept = Vec::new();
    for (a, b, piece) in pairwise_intersections(&p.atoms, &q.atoms) {
        let m = p.atoms[a].length().min(q.atoms[b].length());
        if piece.length() > epsilon0 * m {
            kept.push(piece);
        }
    }
    let covered = total_length(&kept);
    let bound = (1.0 - 4.0 * crate::math::sqrt(delta)) * (1.0 - 3.0 * epsilon0);
    if covered <= bound - 1e-12 {
        return Err(Error::RefinementBound { covered, bound });
    }
    Ok(Refinement { partition: AlmostPartition::measured(kept, None)?, delta, epsilon0, bound })
}
