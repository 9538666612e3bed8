//! SL(2,R) check of the horocycle/geodesic shearing heuristic.
//!
//! Flows act on the left: h_t(x) = u_t·x, g_s(x) = a_s·x with
//! u_t = [[1, t], [0, 1]] and a_s = diag(e^{−s/2}, e^{s/2}). Then
//! h_t∘g_s = g_s∘h_{e^s t} is the matrix identity u_t·a_s = a_s·u_{e^s t},
//! and distances use the right-invariant proxy ‖P·Q⁻¹ − I‖_F, which is the
//! metric the left action preserves.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math;
use crate::mixing::{decay_fit, DecayFit};
use crate::rng::{self, Rng};

/// Determinant drift that triggers renormalization.
pub const DET_TOL: f64 = 1e-12;

/// Proxy constant in d ≤ C·2t^{−1/2}, fixed once from the scan at x = I.
pub const C_PROXY: f64 = 1.0;

/// A 2×2 matrix kept on SL(2,R).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Renormalizations applied along the products that built it.
    pub renorms: u32,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0, renorms: 0 };

    /// Rescales to unit determinant; fails for det ≤ 0.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Mat2 { a, b, c, d, renorms: 0 };
        if !(m.det() > 0.0) {
            return Err(invalid("matrix", "determinant must be positive"));
        }
        Ok(m.renormalized())
    }

    pub fn horocycle(t: f64) -> Self {
        Mat2 { a: 1.0, b: t, c: 0.0, d: 1.0, renorms: 0 }
    }

    pub fn geodesic(s: f64) -> Self {
        Mat2 { a: math::exp(-s / 2.0), b: 0.0, c: 0.0, d: math::exp(s / 2.0), renorms: 0 }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    fn renormalized(mut self) -> Self {
        let det = self.det();
        if (det - 1.0).abs() > DET_TOL {
            let k = 1.0 / math::sqrt(det);
            self.a *= k;
            self.b *= k;
            self.c *= k;
            self.d *= k;
            self.renorms += 1;
        }
        self
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
            renorms: self.renorms + o.renorms,
        }
        .renormalized()
    }

    /// Inverse on SL(2,R).
    pub fn inv(&self) -> Mat2 {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a, renorms: self.renorms }
    }

    pub fn frobenius_diff(&self, o: &Mat2) -> f64 {
        let (x, y, z, w) = (self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d);
        math::sqrt(x * x + y * y + z * z + w * w)
    }

    /// ‖P·Q⁻¹ − I‖_F.
    pub fn distance(&self, o: &Mat2) -> f64 {
        self.mul(&o.inv()).frobenius_diff(&Mat2::IDENTITY)
    }
}

/// ‖u_t·a_s − a_s·u_{e^s t}‖_F.
pub fn commutation_residual(t: f64, s: f64) -> f64 {
    let lhs = Mat2::horocycle(t).mul(&Mat2::geodesic(s));
    let rhs = Mat2::geodesic(s).mul(&Mat2::horocycle(math::exp(s) * t));
    lhs.frobenius_diff(&rhs)
}

/// 10⁻¹⁰·(1 + |t|e^{|s|}).
pub fn commutation_tolerance(t: f64, s: f64) -> f64 {
    1e-10 * (1.0 + t.abs() * math::exp(s.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutationGrid {
    pub points: usize,
    pub max_ratio: f64,
    pub worst: (f64, f64),
    pub pass: bool,
}

/// Random (t, s) with t log-uniform in [10⁻², 10⁶] of random sign and s uniform in [−5, 5].
pub fn commutation_grid(seed: u64, points: usize) -> CommutationGrid {
    let mut r = rng::stream(seed, rng::tag::LEMMA, 3_000_000);
    let mut g = CommutationGrid { points, max_ratio: 0.0, worst: (0.0, 0.0), pass: true };
    for _ in 0..points {
        let t = math::exp(rng::uniform_range(&mut r, -2.0, 6.0) * core::f64::consts::LN_10) * if rng::uniform(&mut r) < 0.5 { -1.0 } else { 1.0 };
        let s = rng::uniform_range(&mut r, -5.0, 5.0);
        let ratio = commutation_residual(t, s) / commutation_tolerance(t, s);
        if ratio > g.max_ratio {
            g.max_ratio = ratio;
            g.worst = (t, s);
        }
    }
    g.pass = g.max_ratio <= 1.0;
    g
}

/// Random matrices within `radius` (Frobenius) of the identity.
pub fn identity_neighbourhood(r: &mut Rng, count: usize, radius: f64) -> Vec<Mat2> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let e: [f64; 4] = core::array::from_fn(|_| rng::uniform_range(r, -1.0, 1.0) * radius / 2.0);
        if let Ok(m) = Mat2::new(1.0 + e[0], e[1], e[2], 1.0 + e[3]) {
            if m.frobenius_diff(&Mat2::IDENTITY) <= radius {
                out.push(m);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearRow {
    pub t: f64,
    pub sigma: f64,
    /// max over |s| ≤ σ_t and the samples of d(h_t∘g_s(x), h_{t+st}(x)).
    pub max_distance: f64,
    pub argmax_s: f64,
    /// C_PROXY·2t^{−1/2}.
    pub bound: f64,
    /// Same maximum in the plain Frobenius distance ‖P − Q‖_F.
    pub plain_frobenius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearScan {
    pub rows: Vec<ShearRow>,
    pub fit: Option<DecayFit>,
    pub all_within_bound: bool,
}

/// For each t: s on a uniform grid of `s_points` over [−σ_t, σ_t], σ_t = t^{−3/4}.
pub fn shear_bound_scan(t_grid: &[f64], x_samples: &[Mat2], s_points: usize) -> Result<ShearScan> {
    if t_grid.iter().any(|&t| !(t >= 1.0)) {
        return Err(invalid("t", "scan needs t ≥ 1"));
    }
    let xs: Vec<Mat2> = if x_samples.is_empty() { alloc::vec![Mat2::IDENTITY] } else { x_samples.to_vec() };
    let sp = s_points.max(2);
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let sigma = math::pow(t, -0.75);
        let mut row = ShearRow { t, sigma, max_distance: 0.0, argmax_s: 0.0, bound: C_PROXY * 2.0 / math::sqrt(t), plain_frobenius: 0.0 };
        for i in 0..sp {
            let s = -sigma + 2.0 * sigma * i as f64 / (sp - 1) as f64;
            let lhs = Mat2::horocycle(t).mul(&Mat2::geodesic(s));
            let rhs = Mat2::horocycle(t + s * t);
            for x in &xs {
                let (p, q) = (lhs.mul(x), rhs.mul(x));
                let d = p.distance(&q);
                if d > row.max_distance {
                    row.max_distance = d;
                    row.argmax_s = s;
                }
                row.plain_frobenius = row.plain_frobenius.max(p.frobenius_diff(&q));
            }
        }
        rows.push(row);
    }
    let series: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.t, r.max_distance, 0.0)).collect();
    let fit = decay_fit(&series).ok();
    let all_within_bound = rows.iter().all(|r| r.max_distance <= r.bound);
    Ok(ShearScan { rows, fit, all_within_bound })
}
