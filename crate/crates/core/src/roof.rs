//! Singular roof functions: the Kochergin power family and the Arnol'd
//! asymmetric-log family, both with the singularity at 0 ≡ 1.

use alloc::format;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{CirclePoint, TWO_128};
use crate::error::{invalid, Error, Result};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    PowerSym,
    PowerAsym,
    LogAsym,
}

/// Default guard: evaluation closer than 2^-80 to the singularity is refused.
pub const DEFAULT_GUARD: f64 = 8.271806125530277e-25;

fn default_guard() -> f64 {
    DEFAULT_GUARD
}

fn is_default_guard(g: &f64) -> bool {
    *g == DEFAULT_GUARD
}

/// Φ = λ(c + A₊x^{−γ} + A₋(1−x)^{−γ}) or λ(c − A₊log x − A₋log(1−x)).
///
/// For the log family `gamma` is the effective exponent used by the V_R
/// threshold only; results that depend on it are extrapolations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoofFunction {
    pub family: Family,
    #[serde(default)]
    pub gamma: f64,
    #[serde(rename = "A_plus")]
    pub a_plus: f64,
    #[serde(rename = "A_minus")]
    pub a_minus: f64,
    pub c: f64,
    pub lambda: f64,
    #[serde(default = "default_guard", skip_serializing_if = "is_default_guard")]
    pub guard: f64,
}

/// Which derivative a Birkhoff sum runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selector {
    Phi,
    Phi1,
    Phi2,
}

impl Selector {
    pub fn order(self) -> u8 {
        match self {
            Selector::Phi => 0,
            Selector::Phi1 => 1,
            Selector::Phi2 => 2,
        }
    }
}

impl RoofFunction {
    pub fn power_sym(gamma: f64, a: f64, c: f64) -> Self {
        RoofFunction { family: Family::PowerSym, gamma, a_plus: a, a_minus: a, c, lambda: 1.0, guard: DEFAULT_GUARD }
    }

    pub fn power_asym(gamma: f64, a_plus: f64, a_minus: f64, c: f64) -> Self {
        RoofFunction { family: Family::PowerAsym, gamma, a_plus, a_minus, c, lambda: 1.0, guard: DEFAULT_GUARD }
    }

    pub fn log_asym(a_plus: f64, a_minus: f64, c: f64) -> Self {
        RoofFunction { family: Family::LogAsym, gamma: 0.0, a_plus, a_minus, c, lambda: 1.0, guard: DEFAULT_GUARD }
    }

    /// The degenerate roof Φ ≡ c (linear flow on the torus).
    pub fn constant(c: f64) -> Self {
        RoofFunction::power_sym(0.5, 0.0, c)
    }

    /// γ = 1/2, A = c = 1, normalised to mean 1.
    pub fn kochergin_default() -> Self {
        RoofFunction::power_sym(0.5, 1.0, 1.0).normalized()
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    /// Same shape rescaled to mean 1.
    pub fn normalized(self) -> Self {
        let base = self.with_lambda(1.0);
        let m = base.mean().expect("normalizing a non-integrable roof");
        self.with_lambda(1.0 / m)
    }

    pub fn is_power(&self) -> bool {
        matches!(self.family, Family::PowerSym | Family::PowerAsym)
    }

    pub fn is_constant(&self) -> bool {
        self.a_plus == 0.0 && self.a_minus == 0.0
    }

    /// Field-level validation, reporting the JSON field name.
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.c) {
            return Err(invalid("c", format!("must be > 0, got {}", self.c)));
        }
        if !pos(self.lambda) {
            return Err(invalid("lambda", format!("must be > 0, got {}", self.lambda)));
        }
        if !(self.a_plus.is_finite() && self.a_plus >= 0.0) {
            return Err(invalid("A_plus", format!("must be >= 0, got {}", self.a_plus)));
        }
        if !(self.a_minus.is_finite() && self.a_minus >= 0.0) {
            return Err(invalid("A_minus", format!("must be >= 0, got {}", self.a_minus)));
        }
        if self.family == Family::PowerSym && self.a_plus != self.a_minus {
            return Err(invalid("A_minus", "PowerSym needs A_plus == A_minus"));
        }
        if self.is_power() && !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma", format!("must lie in (0,1), got {}", self.gamma)));
        }
        if !(self.guard > 0.0 && self.guard < 0.25) {
            return Err(invalid("guard", "must lie in (0, 1/4)"));
        }
        Ok(())
    }

    pub fn guard_raw(&self) -> u128 {
        (self.guard * TWO_128) as u128
    }

    /// Φ^{(order)} from the two one-sided distances to the singularity.
    #[inline]
    pub fn eval_sides(&self, dp: f64, dm: f64, order: u8) -> f64 {
        let l = self.lambda;
        match self.family {
            Family::PowerSym | Family::PowerAsym => {
                let g = self.gamma;
                let sp = math::pow_neg(dp, g);
                let sm = math::pow_neg(dm, g);
                match order {
                    0 => l * (self.c + self.a_plus * sp + self.a_minus * sm),
                    1 => l * g * (-self.a_plus * sp / dp + self.a_minus * sm / dm),
                    _ => l * g * (g + 1.0) * (self.a_plus * sp / (dp * dp) + self.a_minus * sm / (dm * dm)),
                }
            }
            Family::LogAsym => match order {
                0 => l * (self.c - self.a_plus * math::ln(dp) - self.a_minus * math::ln(dm)),
                1 => l * (-self.a_plus / dp + self.a_minus / dm),
                _ => l * (self.a_plus / (dp * dp) + self.a_minus / (dm * dm)),
            },
        }
    }

    /// (Φ, Φ′, Φ″) sharing the power evaluations.
    #[inline]
    pub fn eval3_sides(&self, dp: f64, dm: f64) -> [f64; 3] {
        let l = self.lambda;
        match self.family {
            Family::PowerSym | Family::PowerAsym => {
                let g = self.gamma;
                let sp = self.a_plus * math::pow_neg(dp, g);
                let sm = self.a_minus * math::pow_neg(dm, g);
                let (ip, im) = (1.0 / dp, 1.0 / dm);
                [
                    l * (self.c + sp + sm),
                    l * g * (-sp * ip + sm * im),
                    l * g * (g + 1.0) * (sp * ip * ip + sm * im * im),
                ]
            }
            Family::LogAsym => {
                let (ip, im) = (1.0 / dp, 1.0 / dm);
                [
                    l * (self.c - self.a_plus * math::ln(dp) - self.a_minus * math::ln(dm)),
                    l * (-self.a_plus * ip + self.a_minus * im),
                    l * (self.a_plus * ip * ip + self.a_minus * im * im),
                ]
            }
        }
    }

    /// Φ, Φ′ or Φ″ at x, refusing points inside the guard.
    pub fn eval(&self, x: CirclePoint, order: u8) -> Result<f64> {
        if x.dist_raw() < self.guard_raw() {
            return Err(Error::SingularityProximity { distance: x.dist(), index: 0 });
        }
        let (dp, dm) = x.side_distances();
        Ok(self.eval_sides(dp, dm, order))
    }

    /// Φ at a real coordinate in (0,1), for quadrature and plotting.
    pub fn eval_f64(&self, x: f64, order: u8) -> f64 {
        self.eval_sides(x, 1.0 - x, order)
    }

    pub fn mean(&self) -> Result<f64> {
        match self.family {
            Family::PowerSym | Family::PowerAsym => {
                if !(self.gamma < 1.0) {
                    return Err(Error::NonIntegrable(self.gamma));
                }
                Ok(self.lambda * (self.c + (self.a_plus + self.a_minus) / (1.0 - self.gamma)))
            }
            Family::LogAsym => Ok(self.lambda * (self.c + self.a_plus + self.a_minus)),
        }
    }

    /// Location and value of min Φ (Φ is convex on (0,1)).
    pub fn minimum(&self) -> (f64, f64) {
        if self.is_constant() {
            return (0.5, self.lambda * self.c);
        }
        let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval_f64(mid, 1) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        (x, self.eval_f64(x, 0))
    }

    /// The exponent used by V_R: γ, or the configured effective exponent for log roofs.
    pub fn v_exponent(&self) -> f64 {
        self.gamma
    }

    /// R^{(1+ζ/2)γ}, after checking R > 1 and (1+ζ)(1+γ) < 2.
    pub fn v_threshold(&self, r: f64, zeta: f64) -> Result<f64> {
        let g = self.v_exponent();
        if !(r > 1.0) {
            return Err(invalid("R", format!("must exceed 1, got {r}")));
        }
        if !(g > 0.0) {
            return Err(invalid("gamma", "V_R needs a positive (effective) exponent"));
        }
        if !((1.0 + zeta) * (1.0 + g) < 2.0) {
            return Err(invalid("zeta", format!("(1+zeta)(1+gamma) = {} must be < 2", (1.0 + zeta) * (1.0 + g))));
        }
        Ok(math::pow(r, (1.0 + zeta / 2.0) * g))
    }

    /// x ∈ V_R ⟺ Φ(x) ≤ R^{(1+ζ/2)γ}.
    pub fn v_set_membership(&self, x: CirclePoint, r: f64, zeta: f64) -> Result<bool> {
        let thr = self.v_threshold(r, zeta)?;
        if x.dist_raw() < self.guard_raw() {
            return Ok(false);
        }
        Ok(self.eval(x, 0)? <= thr)
    }

    /// One-sided distances (d₊, d₋) such that Φ ≤ thr exactly on [d₊, 1 − d₋]
    /// (within bisection resolution, rounded outward). None if Φ > thr everywhere.
    pub fn sublevel_margins(&self, thr: f64) -> Option<(f64, f64)> {
        let (xm, vm) = self.minimum();
        if vm > thr {
            return None;
        }
        let solve = |mut lo: f64, mut hi: f64, left: bool| {
            // Φ(lo) > thr ≥ Φ(hi) on the left branch, mirrored on the right
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let above = self.eval_f64(mid, 0) > thr;
                if above == left {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if left {
                hi
            } else {
                lo
            }
        };
        let dp = if self.eval_f64(1e-300, 0) <= thr { 0.0 } else { solve(1e-300, xm, true) };
        let right = if self.eval_f64(1.0 - 1e-16, 0) <= thr { 1.0 } else { solve(xm, 1.0 - 1e-16, false) };
        Some((dp, 1.0 - right))
    }

    /// Inverse-CDF draw from the density Φ/mean(Φ) via its mixture components.
    /// `u` are three independent uniforms in [0,1).
    pub fn sample_base(&self, u: [f64; 3]) -> f64 {
        let l = self.lambda;
        let (wp, wm) = match self.family {
            Family::LogAsym => (l * self.a_plus, l * self.a_minus),
            _ => (l * self.a_plus / (1.0 - self.gamma), l * self.a_minus / (1.0 - self.gamma)),
        };
        let w0 = l * self.c;
        let total = w0 + wp + wm;
        let pick = u[0] * total;
        // a draw from the singular component concentrated at 0
        let tail = |v: f64, w: f64| match self.family {
            Family::LogAsym => (1.0 - v) * (1.0 - w),
            _ => math::pow(1.0 - v, 1.0 / (1.0 - self.gamma)),
        };
        if pick < w0 {
            u[1]
        } else if pick < w0 + wp {
            tail(u[1], u[2])
        } else {
            1.0 - tail(u[1], u[2])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let r = RoofFunction::power_sym(0.5, 1.0, 1.0);
        let v = r.eval(CirclePoint::from_f64(0.25), 0).unwrap();
        assert!((v - (3.0 + 2.0 / libm::sqrt(3.0))).abs() < 1e-12);
        assert!(r.eval(CirclePoint::from_f64(0.5), 1).unwrap().abs() < 1e-12);
        let tiny = CirclePoint(1u128 << 28); // 2^-100
        assert!(matches!(r.eval(tiny, 0), Err(Error::SingularityProximity { .. })));
    }

    #[test]
    fn mean_examples() {
        assert_eq!(RoofFunction::power_sym(0.5, 1.0, 1.0).mean().unwrap(), 5.0);
        assert_eq!(RoofFunction::log_asym(2.0, 1.0, 1.0).mean().unwrap(), 4.0);
        let n = RoofFunction::power_asym(0.3, 2.0, 0.5, 0.7).normalized();
        assert!((n.mean().unwrap() - 1.0).abs() < 1e-15);
        assert!(RoofFunction::power_sym(1.0, 1.0, 1.0).mean().is_err());
    }

    #[test]
    fn v_set_examples() {
        let r = RoofFunction::kochergin_default();
        assert!(r.v_set_membership(CirclePoint::from_f64(0.5), 1e6, 0.1).unwrap());
        let thr = r.v_threshold(1e6, 0.1).unwrap();
        let (dp, _) = r.sublevel_margins(2.0 * thr).unwrap();
        let x = CirclePoint::from_f64(dp * 0.999);
        assert!(r.eval(x, 0).unwrap() > thr);
        assert!(!r.v_set_membership(x, 1e6, 0.1).unwrap());
        assert!(r.v_set_membership(CirclePoint::from_f64(0.5), 1.0, 0.1).is_err());
        assert!(r.v_set_membership(CirclePoint::from_f64(0.5), 10.0, 0.5).is_err());
    }
}
