use kochergin_core::arithmetic::{expand_cf, orbit_point, AlphaContext, AlphaSpec, CirclePoint};
use kochergin_core::birkhoff::*;
use kochergin_core::roof::{RoofFunction, Selector};
use kochergin_core::rng;
use proptest::prelude::*;

fn golden() -> AlphaContext {
    expand_cf(&AlphaSpec::golden(), 60).unwrap()
}

fn roof() -> RoofFunction {
    RoofFunction::kochergin_default()
}

/// Exact sum of f64 terms, each ≥ 2^-8, as integers scaled by 2^60.
fn exact_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut acc: i128 = 0;
    for v in terms {
        assert!(v.abs() >= 1.0 / 256.0 && v.abs() < 2f64.powi(60));
        let scaled = v * 2f64.powi(60);
        assert_eq!(scaled.fract(), 0.0);
        acc += scaled as i128;
    }
    acc as f64 / 2f64.powi(60)
}

fn reference(roof: &RoofFunction, x: CirclePoint, n: i64, ctx: &AlphaContext) -> f64 {
    exact_sum((0..n).map(|i| roof.eval(orbit_point(x, i, ctx), 0).unwrap()))
}

#[test]
fn empty_sum_is_zero() {
    let ctx = golden();
    for x in [0.1, 0.5, 0.999] {
        let r = birkhoff_sum(&roof(), Selector::Phi, CirclePoint::from_f64(x), 0, &ctx).unwrap();
        assert_eq!(r.value, 0.0);
    }
}

#[test]
fn compensated_sum_matches_exact_summation() {
    let ctx = golden();
    let x = CirclePoint::from_f64(0.317);
    let got = birkhoff_sum(&roof(), Selector::Phi, x, 1000, &ctx).unwrap();
    let want = reference(&roof(), x, 1000, &ctx);
    assert!((got.value - want).abs() <= 1e-8 * want.abs(), "{} vs {want}", got.value);
    assert!(got.error_bound <= 1e-8 * want.abs());
    // one huge term next to many small ones
    let near = CirclePoint(orbit_point(CirclePoint::ZERO, -37, &ctx).0.wrapping_add(1u128 << 64));
    let got = birkhoff_sum(&roof(), Selector::Phi, near, 5000, &ctx).unwrap();
    let want = reference(&roof(), near, 5000, &ctx);
    assert!((got.value - want).abs() <= 1e-12 * want.abs(), "{} vs {want}", got.value);
}

#[test]
fn negative_times_follow_the_sign_convention() {
    let ctx = golden();
    let x = CirclePoint::from_f64(0.2718);
    for n in [1i64, 7, 300] {
        let back = birkhoff_sum(&roof(), Selector::Phi, x, -n, &ctx).unwrap().value;
        let fwd = birkhoff_sum(&roof(), Selector::Phi, orbit_point(x, -n, &ctx), n, &ctx).unwrap().value;
        assert!((back + fwd).abs() <= 1e-12 * fwd);
    }
}

#[test]
fn guard_hit_names_the_index() {
    let ctx = golden();
    let x = orbit_point(CirclePoint::ZERO, -12, &ctx);
    match birkhoff_sum(&roof(), Selector::Phi, x, 100, &ctx) {
        Err(kochergin_core::Error::SingularityProximity { index, .. }) => assert_eq!(index, 12),
        other => panic!("{other:?}"),
    }
    assert!(birkhoff_sum_report(&roof(), Selector::Phi, x, 100, &ctx).hit_singularity);
}

#[test]
fn hitting_count_matches_forward_scan() {
    let ctx = golden();
    let x = CirclePoint::from_f64(0.2);
    let (n, rr) = hitting_count(&roof(), &ctx, x, 0.0, 1e3).unwrap();
    let mut s = 0.0;
    let mut k = 0;
    loop {
        let f = roof().eval(orbit_point(x, k, &ctx), 0).unwrap();
        if s + f > 1e3 {
            break;
        }
        s += f;
        k += 1;
    }
    assert_eq!(n, k);
    assert!((rr - (1e3 - s)).abs() < 1e-9);
    assert_eq!(hitting_count(&roof(), &ctx, x, 0.3, 0.0).unwrap(), (0, 0.3));
}

#[test]
fn fast_block_sum_examples() {
    let ctx = golden();
    let x = CirclePoint::from_f64(0.1);
    for sel in [Selector::Phi, Selector::Phi1, Selector::Phi2] {
        let direct = birkhoff_sum(&roof(), sel, x, ctx.q[10] as i64, &ctx).unwrap();
        let fast = fast_block_sum(&roof(), sel, x, ctx.q[10] as i64, &ctx).unwrap();
        assert!((direct.value - fast.value).abs() <= direct.error_bound + fast.error_bound + 1e-13 * direct.value.abs());
    }
    let one = fast_block_sum(&roof(), Selector::Phi, x, 1, &ctx).unwrap();
    assert_eq!(one.value, roof().eval(x, 0).unwrap());
    let (q5, q2) = (ctx.q[5] as i64, ctx.q[2] as i64);
    let whole = fast_block_sum(&roof(), Selector::Phi, x, q5 + q2, &ctx).unwrap().value;
    let a = birkhoff_sum(&roof(), Selector::Phi, x, q5, &ctx).unwrap().value;
    let b = birkhoff_sum(&roof(), Selector::Phi, orbit_point(x, q5, &ctx), q2, &ctx).unwrap().value;
    assert!((whole - (a + b)).abs() <= 1e-13 * whole);
}

#[test]
fn fast_block_sum_matches_direct_on_random_instances() {
    let ctx = golden();
    let mut r = rng::stream(5, 99, 2);
    let mut cache = BlockCache::default();
    for _ in 0..1000 {
        let x = CirclePoint(rng::uniform_u128(&mut r));
        let n = (10f64.powf(rng::uniform_range(&mut r, 0.0, 6.0))) as i64;
        let n = if rng::uniform(&mut r) < 0.2 { -n } else { n };
        let direct = birkhoff_sum_report(&roof(), Selector::Phi, x, n, &ctx);
        if direct.hit_singularity {
            continue;
        }
        let fast = fast_block_sum_cached(&roof(), Selector::Phi, x, n, &ctx, &mut cache).unwrap();
        let tol = direct.error_bound + fast.error_bound + 1e-12 * direct.value.abs();
        assert!((direct.value - fast.value).abs() <= tol, "x = {x:?}, N = {n}");
    }
}

#[test]
fn orbit_table_agrees_with_direct_sums() {
    let ctx = golden();
    let base = CirclePoint::from_f64(0.41);
    let tb = OrbitTable::build(&roof(), &ctx, base, -500, 2000, [true, true, true]).unwrap();
    for (j, n) in [(0i64, 1000i64), (-300, 700), (100, -400), (1500, 499)] {
        for (o, sel) in [(0u8, Selector::Phi), (1, Selector::Phi1), (2, Selector::Phi2)] {
            let d = birkhoff_sum(&roof(), sel, orbit_point(base, j, &ctx), n, &ctx).unwrap().value;
            assert!((tb.sum_at(o, j, n) - d).abs() <= 1e-11 * d.abs().max(1.0), "order {o} j {j} n {n}");
        }
        let (hn, hr) = tb.hitting(j, 0.1, 200.0).unwrap();
        let (dn, dr) = hitting_count(&roof(), &ctx, orbit_point(base, j, &ctx), 0.1, 200.0).unwrap();
        assert_eq!(hn, dn);
        assert!((hr - dr).abs() < 1e-9);
    }
}

#[test]
fn es_suite_on_golden_and_silver() {
    for spec in [AlphaSpec::golden(), AlphaSpec::sqrt2_minus_1()] {
        let ctx = expand_cf(&spec, 40).unwrap();
        let cfg = EsConfig { samples: 300, n_hi: 14, ..EsConfig::default() };
        let rep = verify_es(&roof(), &ctx, &cfg).unwrap();
        for rec in &rep.records {
            for c in &rec.constants {
                assert!(c.value.is_finite(), "{:?} {}", rec.estimate, c.name);
            }
            if let Some(f) = rec.kappa_fraction {
                assert!((0.0..=1.0).contains(&f));
            }
        }
    }
}

#[test]
fn es4_deviation_is_bounded_by_its_fitted_constant() {
    // direct summation oracle: |S_q Φ(x) − q| ≤ Φ(x_min) + C q^γ with the
    // constant fitted on an independent sample set
    let ctx = golden();
    let cfg = EsConfig { suite: vec![EsEstimate::ES4], samples: 400, ..EsConfig::default() };
    let c = verify_es(&roof(), &ctx, &cfg).unwrap().records[0].constants[0].value;
    let mut r = rng::stream(77, 99, 3);
    for _ in 0..200 {
        let x = CirclePoint::from_f64(rng::uniform_range(&mut r, 0.2, 0.8));
        let n = rng::uniform_int(&mut r, 3, 18) as usize;
        let q = ctx.q[n] as i64;
        let s = reference(&roof(), x, q, &ctx);
        let xm = kochergin_core::arithmetic::orbit_min_distance(x, q as u64, &ctx);
        let near = roof().eval(orbit_point(x, xm.index as i64, &ctx), 0).unwrap();
        assert!((s - q as f64).abs() <= near + 1.5 * c * (q as f64).powf(0.5), "n = {n}");
    }
}

#[test]
fn derivative_estimates_skip_the_constant_roof() {
    let ctx = golden();
    let flat = RoofFunction::constant(1.0);
    let rep = verify_es(&flat, &ctx, &EsConfig { samples: 50, ..EsConfig::default() }).unwrap();
    for rec in &rep.records {
        let skipped = matches!(rec.estimate, EsEstimate::ES1 | EsEstimate::ES2 | EsEstimate::ES3);
        assert_eq!(rec.skipped.is_some(), skipped, "{:?}", rec.estimate);
    }
    assert!(verify_es(&RoofFunction::power_sym(0.5, 1.0, 1.0), &ctx, &EsConfig::default()).is_err());
}

#[test]
fn kappa_decreases_slowly() {
    let k = Kappa::LogLog;
    assert!(k.eval(1e3) > k.eval(1e6) && k.eval(1e6) > 0.0);
    assert!((k.eval(0.0) - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cocycle_identity(x in any::<u128>(), m in 0i64..5000, n in 0i64..5000) {
        let ctx = golden();
        let x = CirclePoint(x);
        let all = birkhoff_sum_report(&roof(), Selector::Phi, x, m + n, &ctx);
        prop_assume!(!all.hit_singularity);
        let a = birkhoff_sum(&roof(), Selector::Phi, x, m, &ctx).unwrap().value;
        let b = birkhoff_sum(&roof(), Selector::Phi, orbit_point(x, m, &ctx), n, &ctx).unwrap().value;
        prop_assert!((all.value - a - b).abs() <= 1e-9 * all.value.abs().max(1.0));
    }

    #[test]
    fn sums_increase_with_n(x in any::<u128>(), n in 1i64..2000) {
        let ctx = golden();
        let x = CirclePoint(x);
        let a = birkhoff_sum_report(&roof(), Selector::Phi, x, n, &ctx);
        let b = birkhoff_sum_report(&roof(), Selector::Phi, x, n + 1, &ctx);
        prop_assume!(!b.hit_singularity);
        prop_assert!(b.value > a.value);
    }

    #[test]
    fn hitting_count_brackets_the_time(x in 0.001f64..0.999, u in 0.0f64..1.0, t in -2000.0f64..2000.0) {
        let ctx = golden();
        let x = CirclePoint::from_f64(x);
        let r = u * roof().eval(x, 0).unwrap();
        let (n, rr) = hitting_count(&roof(), &ctx, x, r, t).unwrap();
        let s = birkhoff_sum(&roof(), Selector::Phi, x, n, &ctx).unwrap().value;
        let top = roof().eval(orbit_point(x, n, &ctx), 0).unwrap();
        let tol = 1e-9 * (1.0 + t.abs());
        prop_assert!(s <= r + t + tol);
        prop_assert!(r + t < s + top + tol);
        prop_assert!((rr - (r + t - s)).abs() <= tol);
    }
}
