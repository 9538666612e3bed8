use kochergin_core::arithmetic::CirclePoint;
use kochergin_core::roof::RoofFunction;
use kochergin_core::{rng, Error};

fn roofs() -> Vec<RoofFunction> {
    vec![
        RoofFunction::power_sym(0.5, 1.0, 1.0),
        RoofFunction::kochergin_default(),
        RoofFunction::power_asym(0.3, 2.0, 0.5, 0.7),
        RoofFunction::power_asym(0.9, 1.0, 1.0, 1.0).normalized(),
        RoofFunction::log_asym(2.0, 1.0, 1.0),
    ]
}

#[test]
fn eval_examples() {
    let r = RoofFunction::power_sym(0.5, 1.0, 1.0);
    let v = r.eval(CirclePoint::from_f64(0.25), 0).unwrap();
    assert!((v - (3.0 + 2.0 / 3f64.sqrt())).abs() < 1e-14);
    assert!(r.eval(CirclePoint::from_f64(0.5), 1).unwrap().abs() < 1e-14);
    match r.eval(CirclePoint::from_f64(2f64.powi(-100)), 0) {
        Err(Error::SingularityProximity { distance, .. }) => assert!(distance < 1e-29),
        other => panic!("{other:?}"),
    }
}

#[test]
fn mean_examples() {
    assert_eq!(RoofFunction::power_sym(0.5, 1.0, 1.0).mean().unwrap(), 5.0);
    assert_eq!(RoofFunction::log_asym(2.0, 1.0, 1.0).mean().unwrap(), 4.0);
    for r in roofs() {
        assert!((r.normalized().mean().unwrap() - 1.0).abs() < 1e-15);
    }
    let mut bad = RoofFunction::power_sym(0.5, 1.0, 1.0);
    bad.gamma = 1.0;
    assert!(matches!(bad.mean(), Err(Error::NonIntegrable(_))));
}

#[test]
fn derivatives_match_finite_differences() {
    let mut r = rng::stream(11, 99, 0);
    for roof in roofs() {
        for _ in 0..1000 {
            let x = rng::uniform_range(&mut r, 1e-3, 1.0 - 1e-3);
            let h = 1e-6 * x.min(1.0 - x);
            let f = |y: f64| roof.eval_f64(y, 0);
            let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
            let g = |y: f64| roof.eval_f64(y, 1);
            let d2 = (g(x + h) - g(x - h)) / (2.0 * h);
            let e1 = roof.eval_f64(x, 1);
            let e2 = roof.eval_f64(x, 2);
            let scale1 = e1.abs().max(roof.eval_f64(x, 0) / x.min(1.0 - x));
            assert!((d1 - e1).abs() <= 1e-6 * scale1, "{roof:?} Φ' at {x}: {d1} vs {e1}");
            assert!((d2 - e2).abs() <= 1e-6 * e2.abs().max(1.0), "{roof:?} Φ'' at {x}: {d2} vs {e2}");
        }
    }
}

#[test]
fn second_derivative_asymptotics() {
    for roof in [RoofFunction::power_sym(0.5, 1.0, 1.0), RoofFunction::power_asym(0.3, 2.0, 0.5, 0.7).with_lambda(0.4)] {
        let g = roof.gamma;
        let limit = roof.lambda * roof.a_plus * g * (g + 1.0);
        for x in [1e-4f64, 1e-6, 1e-8] {
            let v = x.powf(2.0 + g) * roof.eval(CirclePoint::from_f64(x), 2).unwrap();
            assert!((v / limit - 1.0).abs() < 0.01, "x = {x}: {v} vs {limit}");
        }
    }
}

/// ∫ over [δ, 1−δ] by Simpson in log coordinates towards each end, plus the
/// closed-form tails on [0, δ] and [1−δ, 1].
fn quadrature_mean(roof: &RoofFunction) -> f64 {
    let delta: f64 = 1e-9;
    let half = |mirror: bool| {
        let (a, b) = (delta.ln(), 0.5f64.ln());
        let n = 200_000;
        let h = (b - a) / n as f64;
        let f = |u: f64| {
            let x = u.exp();
            roof.eval_f64(if mirror { 1.0 - x } else { x }, 0) * x
        };
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let l = roof.lambda;
    let tail = |a_near: f64, a_far: f64| match roof.family {
        kochergin_core::roof::Family::LogAsym => l * (roof.c * delta + a_near * delta * (1.0 - delta.ln()) + a_far * delta * delta / 2.0),
        _ => {
            let g = roof.gamma;
            l * (roof.c * delta + a_near * delta.powf(1.0 - g) / (1.0 - g) + a_far * (1.0 - (1.0 - delta).powf(1.0 - g)) / (1.0 - g))
        }
    };
    half(false) + half(true) + tail(roof.a_plus, roof.a_minus) + tail(roof.a_minus, roof.a_plus)
}

#[test]
fn closed_form_mean_matches_quadrature() {
    for roof in roofs() {
        let q = quadrature_mean(&roof);
        let m = roof.mean().unwrap();
        assert!((q - m).abs() <= 1e-8 * m, "{roof:?}: {q} vs {m}");
    }
}

#[test]
fn v_set_examples() {
    let roof = RoofFunction::kochergin_default();
    assert!(roof.v_set_membership(CirclePoint::from_f64(0.5), 1e6, 0.1).unwrap());
    let thr = roof.v_threshold(1e6, 0.1).unwrap();
    // Φ(x) = 2·thr near 0: solve λ(c + x^{-γ} + (1−x)^{-γ}) = 2thr on (0, 1/2)
    let (mut lo, mut hi) = (1e-30, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if roof.eval_f64(mid, 0) > 2.0 * thr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!(!roof.v_set_membership(CirclePoint::from_f64(hi), 1e6, 0.1).unwrap());
    assert!(roof.v_set_membership(CirclePoint::from_f64(0.5), 1.0, 0.1).is_err());
    assert!(roof.v_threshold(10.0, 0.5).is_err());
}

#[test]
fn sublevel_margins_bracket_the_threshold() {
    let roof = RoofFunction::power_asym(0.3, 2.0, 0.5, 0.7);
    let thr = 10.0;
    let (dp, dm) = roof.sublevel_margins(thr).unwrap();
    assert!(roof.eval_f64(dp, 0) <= thr * (1.0 + 1e-12));
    assert!(roof.eval_f64(dp * 0.999, 0) > thr);
    assert!(roof.eval_f64(1.0 - dm, 0) <= thr * (1.0 + 1e-12));
    assert!(roof.sublevel_margins(roof.minimum().1 * 0.5).is_none());
}

#[test]
fn validation_names_the_field() {
    let mut r = RoofFunction::kochergin_default();
    r.c = -1.0;
    assert!(format!("{}", r.validate().unwrap_err()).contains("c"));
    let json = r#"{"family":"PowerSym","gamma":0.5,"A_plus":1,"A_minus":1,"c":1,"lambda":0.2}"#;
    let parsed: RoofFunction = serde_json::from_str(json).unwrap();
    assert_eq!(parsed, RoofFunction::power_sym(0.5, 1.0, 1.0).with_lambda(0.2));
}

#[test]
fn base_sampler_follows_the_density() {
    let roof = RoofFunction::power_asym(0.6, 1.5, 0.5, 1.0).normalized();
    let mut r = rng::stream(3, 99, 1);
    let n = 200_000;
    let bins = 20;
    let mut counts = vec![0usize; bins];
    for _ in 0..n {
        let x = roof.sample_base([rng::uniform(&mut r), rng::uniform(&mut r), rng::uniform(&mut r)]);
        counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
    }
    // bin masses from the closed-form primitive of Φ
    for (b, &c) in counts.iter().enumerate() {
        let (a, e) = (b as f64 / bins as f64, (b + 1) as f64 / bins as f64);
        let mass = primitive(&roof, e) - primitive(&roof, a);
        let se = (mass * (1.0 - mass) / n as f64).sqrt();
        let got = c as f64 / n as f64;
        assert!((got - mass).abs() < 5.0 * se, "bin {b}: {got} vs {mass}");
    }
}

fn primitive(roof: &RoofFunction, x: f64) -> f64 {
    let g = roof.gamma;
    roof.lambda * (roof.c * x + roof.a_plus * x.powf(1.0 - g) / (1.0 - g) + roof.a_minus * (1.0 - (1.0 - x).powf(1.0 - g)) / (1.0 - g))
}
