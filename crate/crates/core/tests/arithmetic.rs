use kochergin_core::arithmetic::*;
use kochergin_core::Error;
use proptest::prelude::*;

fn golden() -> AlphaContext {
    expand_cf(&AlphaSpec::golden(), 60).unwrap()
}

fn silver() -> AlphaContext {
    expand_cf(&AlphaSpec::sqrt2_minus_1(), 40).unwrap()
}

#[test]
fn denominators_satisfy_the_recursion() {
    for ctx in [golden(), silver(), expand_cf(&AlphaSpec::Periodic { pre: vec![3, 1], period: vec![1, 7] }, 30).unwrap()] {
        assert_eq!(ctx.q[0], 1);
        assert_eq!(ctx.q[1], ctx.a(1) as u128);
        for n in 1..ctx.n_max() {
            assert_eq!(ctx.q[n + 1], ctx.a(n + 1) as u128 * ctx.q[n] + ctx.q[n - 1], "n = {n}");
        }
    }
}

#[test]
fn silver_table() {
    let ctx = expand_cf(&AlphaSpec::sqrt2_minus_1(), 5).unwrap();
    assert_eq!(ctx.quotients, vec![2, 2, 2, 2, 2]);
    assert_eq!(ctx.q, vec![1, 2, 5, 12, 29, 70]);
}

#[test]
fn convergents_are_best_approximations() {
    for ctx in [golden(), silver()] {
        let alpha = ctx.alpha_point();
        for n in 1..ctx.n_max() {
            let qn = ctx.q[n];
            if qn > 10_000 {
                break;
            }
            let dq = orbit_point(CirclePoint::ZERO, qn as i64, &ctx).dist_raw();
            assert!(dq < length_raw_inv(ctx.q[n + 1]), "‖q_n α‖ < 1/q_(n+1) at n = {n}");
            let mut y = CirclePoint::ZERO;
            for j in 1..qn {
                y = y.add(alpha);
                assert!(dq < y.dist_raw(), "q_{n} = {qn} beaten by j = {j}");
            }
        }
    }
}

fn length_raw_inv(q: u128) -> u128 {
    u128::MAX / q
}

#[test]
fn ostrowski_round_trip_up_to_1e5() {
    for ctx in [golden(), silver()] {
        for n in 1..=100_000u128 {
            let e = ostrowski(n, &ctx).unwrap();
            assert_eq!(e.reconstruct(&ctx), n);
            assert!(e.is_legal(&ctx), "illegal expansion of {n}: {:?}", e.coefficients);
        }
    }
}

// Every legal digit vector with value N ≤ 50, by exhaustive search; the
// greedy expansion must be the only one.
fn legal_expansions(ctx: &AlphaContext, n: u128) -> Vec<Vec<u64>> {
    let top = ctx.q.iter().position(|&q| q > n).unwrap();
    let mut out = Vec::new();
    let mut digits = vec![0u64; top];
    fn rec(ctx: &AlphaContext, j: usize, rem: u128, digits: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if j == digits.len() {
            if rem == 0 {
                let e = OstrowskiExpansion { coefficients: digits.clone(), target: 0 };
                if e.is_legal(ctx) {
                    out.push(digits.clone());
                }
            }
            return;
        }
        for b in 0..=ctx.a(j + 1) {
            let v = b as u128 * ctx.q[j];
            if v > rem {
                break;
            }
            digits[j] = b;
            rec(ctx, j + 1, rem - v, digits, out);
        }
        digits[j] = 0;
    }
    rec(ctx, 0, n, &mut digits, &mut out);
    out
}

#[test]
fn greedy_expansion_is_the_unique_legal_one() {
    for ctx in [golden(), silver()] {
        for n in 1..=50u128 {
            let all = legal_expansions(&ctx, n);
            assert_eq!(all.len(), 1, "N = {n}: {all:?}");
            let mut g = ostrowski(n, &ctx).unwrap().coefficients;
            g.resize(all[0].len(), 0);
            assert_eq!(g, all[0], "N = {n}");
        }
    }
}

#[test]
fn ostrowski_of_ten_and_of_a_denominator() {
    let ctx = golden();
    let e = ostrowski(10, &ctx).unwrap();
    let used: Vec<u128> = e.coefficients.iter().enumerate().filter(|(_, &b)| b > 0).map(|(j, _)| ctx.q[j]).collect();
    assert_eq!(used, vec![2, 8]);
    let e = ostrowski(ctx.q[5], &ctx).unwrap();
    assert_eq!(e.coefficients.iter().sum::<u64>(), 1);
    assert_eq!(e.coefficients[5], 1);
    assert!(matches!(ostrowski(0, &ctx), Err(Error::OutOfTable { .. })));
    assert!(ostrowski(*ctx.q.last().unwrap(), &ctx).is_err());
}

#[test]
fn rotation_steps_do_not_drift() {
    let ctx = golden();
    let x = CirclePoint::from_f64(0.123);
    let mut y = x;
    let steps = 100_000_000i64;
    for _ in 0..steps {
        y = y.add(ctx.alpha_point());
    }
    assert_eq!(y, orbit_point(x, steps, &ctx));
}

#[test]
fn min_distance_at_alpha_half() {
    let ctx = golden();
    let x = CirclePoint(ctx.alpha / 2);
    assert_eq!(orbit_min_distance(x, 50, &ctx), orbit_min_distance_scan(x, 50, &ctx));
    assert_eq!(orbit_min_distance(CirclePoint::ZERO, 2, &ctx).index, 0);
    assert_eq!(orbit_min_distance(CirclePoint::ZERO, 2, &ctx).raw, 0);
    let half = orbit_min_distance(CirclePoint::from_f64(0.5), 1, &ctx);
    assert_eq!((half.distance(), half.index), (0.5, 0));
}

#[test]
fn bracket_is_left_closed() {
    let ctx = golden();
    assert_eq!(ctx.q[denominator_bracket(6.0, &ctx, 1.0).unwrap()], 5);
    assert_eq!(denominator_bracket(ctx.q[7] as f64, &ctx, 1.0).unwrap(), 7);
    assert_eq!(denominator_bracket(ctx.q[7] as f64 - 0.5, &ctx, 1.0).unwrap(), 6);
    assert!(matches!(denominator_bracket(1e40, &ctx, 1.0), Err(Error::OutOfTable { .. })));
}

#[test]
fn decimal_input_reports_safe_depth() {
    // √2 − 1 to 30 digits
    let spec = AlphaSpec::Decimal("0.414213562373095048801688724209".into());
    let ok = expand_cf(&spec, 20).unwrap();
    assert!(ok.quotients.iter().all(|&a| a == 2));
    match expand_cf(&spec, 200) {
        Err(Error::InsufficientPrecision { largest_safe, .. }) => assert!((20..200).contains(&largest_safe)),
        other => panic!("{other:?}"),
    }
    assert!(matches!(expand_cf(&AlphaSpec::Decimal("0.5".into()), 5), Err(Error::RationalInput { .. })));
}

#[test]
fn diophantine_classifier_reports_constants() {
    let r = classify_diophantine(&golden(), 0.5);
    assert!(r.c_log_squared.is_finite() && r.c_log_squared > 0.0);
    assert!(r.c_power < 2.0);
}

proptest! {
    #[test]
    fn orbit_is_deterministic(x in any::<u128>(), j in -1_000_000_000i64..1_000_000_000) {
        let ctx = golden();
        let x = CirclePoint(x);
        prop_assert_eq!(orbit_point(x, j, &ctx), orbit_point(orbit_point(x, j - 1, &ctx), 1, &ctx));
        prop_assert_eq!(orbit_point(orbit_point(x, j, &ctx), -j, &ctx), x);
    }

    #[test]
    fn fast_min_distance_matches_scan(x in any::<u128>(), n in 1u64..3000, silver_alpha in any::<bool>()) {
        let ctx = if silver_alpha { silver() } else { golden() };
        let x = CirclePoint(x);
        prop_assert_eq!(orbit_min_distance(x, n, &ctx), orbit_min_distance_scan(x, n, &ctx));
    }

    #[test]
    fn interior_hit_agrees_with_scan(left in any::<u128>(), len_f in 1e-4f64..0.05, m0 in -500i64..500, count in 1u64..400) {
        let ctx = golden();
        let left = CirclePoint(left);
        let len = raw_length(len_f);
        let scan = (m0..m0 + count as i64).find(|&m| {
            let off = orbit_point(CirclePoint::ZERO, -m, &ctx).sub(left).0;
            off > 0 && off < len
        });
        prop_assert_eq!(interior_hit(left, len, m0, count, &ctx).is_some(), scan.is_some());
    }

    #[test]
    fn ostrowski_round_trip_large(n in 1u128..1_000_000_000_000) {
        let ctx = golden();
        let e = ostrowski(n, &ctx).unwrap();
        prop_assert_eq!(e.reconstruct(&ctx), n);
        prop_assert!(e.is_legal(&ctx));
    }
}
