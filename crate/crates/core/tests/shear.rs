use kochergin_core::arithmetic::{expand_cf, raw_length, AlphaContext, AlphaSpec, CirclePoint};
use kochergin_core::birkhoff::Kappa;
use kochergin_core::exec::Sequential;
use kochergin_core::roof::RoofFunction;
use kochergin_core::shear::*;
use kochergin_core::{rng, Error};
use proptest::prelude::*;

fn golden() -> AlphaContext {
    expand_cf(&AlphaSpec::golden(), 60).unwrap()
}

fn iv(left: f64, len: f64) -> CircleInterval {
    CircleInterval::from_f64(left, len).unwrap()
}

fn equipartition(count: usize, shift: f64) -> AlmostPartition {
    let w = u128::MAX / count as u128 + 1;
    let s = raw_length(shift);
    let atoms = (0..count as u128)
        .map(|i| CircleInterval::new(CirclePoint(s.wrapping_add(i * w)), if i + 1 == count as u128 { u128::MAX - (count as u128 - 1) * w + 1 } else { w }).unwrap())
        .collect();
    AlmostPartition::new(atoms, 0.0).unwrap()
}

#[test]
fn partition_construction_and_disjointness() {
    let p = AlmostPartition::new(vec![iv(0.5, 0.25), iv(0.0, 0.5)], 0.25).unwrap();
    assert_eq!(p.len(), 2);
    assert!(p.atoms[0].left < p.atoms[1].left);
    assert!((p.defect() - 0.25).abs() < 1e-15);
    p.verify().unwrap();
    assert!(AlmostPartition::new(vec![iv(0.0, 0.5), iv(0.4, 0.3)], 0.5).is_err());
    assert!(AlmostPartition::new(vec![iv(0.0, 0.5)], 0.1).is_err());
    assert!(AlmostPartition::empty().is_empty());
    assert!(iv(0.9, 0.2).contains(CirclePoint::from_f64(0.05)));
    assert!(!iv(0.9, 0.2).contains(CirclePoint::from_f64(0.15)));
}

#[test]
fn intersection_examples() {
    let p = equipartition(10, 0.0);
    let same = intersect_almost_partitions(&p, &p).unwrap();
    assert_eq!(same.len(), 10);
    assert!(same.defect() < 1e-15);
    let q = equipartition(10, 0.05);
    let pq = intersect_almost_partitions(&p, &q).unwrap();
    assert_eq!(pq.len(), 20);
    assert!(pq.defect() < 1e-15);
    pq.verify().unwrap();
}

#[test]
fn intersection_defect_is_subadditive() {
    let mut r = rng::stream(5, 99, 0);
    for _ in 0..200 {
        let p = random_partial_partition(&mut r, 25, 0.1).unwrap();
        let q = random_partial_partition(&mut r, 17, 0.05).unwrap();
        let pq = intersect_almost_partitions(&p, &q).unwrap();
        pq.verify().unwrap();
        assert!(pq.defect() <= p.defect() + q.defect() + 1e-12);
        assert!(pq.epsilon <= p.epsilon + q.epsilon + 1e-12);
    }
}

#[test]
fn refinement_examples() {
    let p = equipartition(10, 0.0);
    let r = combinatorial_refinement(&p, &p, 0.5).unwrap();
    assert!((r.partition.covered - 1.0).abs() < 1e-12);
    let q = equipartition(10, 0.05);
    let r = combinatorial_refinement(&p, &q, 0.4).unwrap();
    assert!((r.partition.covered - 1.0).abs() < 1e-12);
    assert!(r.partition.covered >= r.bound);
    assert!(combinatorial_refinement(&p, &q, 1.0).is_err());
}

#[test]
fn partition_lemmas_hold_on_random_instances() {
    let s = par_lemma_suite(&Sequential, 3, 1000).unwrap();
    assert!(s.pass(), "{s:?}");
    assert!(s.worst_refinement_margin >= 0.0);
}

fn samples(f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..2000).map(|i| f(i as f64 / 1999.0)).collect()
}

#[test]
fn bruteforce_stretching_examples() {
    assert!(uniform_stretching_bruteforce(&samples(|x| 100.0 * x), 1.0, 0.01, 90.0, 64).unwrap());
    assert!(!uniform_stretching_bruteforce(&samples(|x| x * x), 1.0, 0.01, 0.5, 64).unwrap());
    // range 100 is not more than K = 100
    assert!(!uniform_stretching_bruteforce(&samples(|x| 100.0 * x), 1.0, 0.5, 100.0, 64).unwrap());
    assert!(matches!(uniform_stretching_bruteforce(&[0.0; 999], 1.0, 0.1, 0.1, 8), Err(Error::InsufficientSamples { .. })));
}

#[test]
fn sufficient_stretching_examples() {
    assert!(uniform_stretching_sufficient(100.0, 0.0, 1.0, 0.01, 90.0));
    assert!(!uniform_stretching_sufficient(90.0, 0.0, 1.0, 0.01, 90.0));
    assert!(!uniform_stretching_sufficient(100.0, 2.0, 1.0, 0.01, 90.0));
}

#[test]
fn sufficient_criterion_implies_definition() {
    let s = us_suite(&Sequential, 7, 100, 2000).unwrap();
    assert!(s.pass(), "{:?}", s.violations);
    assert!(s.sufficient > 0);
}

fn uniform_sampler(r: &mut rng::Rng) -> f64 {
    rng::uniform(r)
}

#[test]
fn almost_measure_preservation() {
    let boxes = equal_boxes(10);
    let id = almost_mp_check(|x| x, uniform_sampler, lebesgue, &boxes, 0.0, 100_000, 1);
    assert!(id.pass && id.defect <= 3.0 * id.stderr, "{id:?}");
    let rot = almost_mp_check(|x| x + 0.618, uniform_sampler, lebesgue, &boxes, 0.0, 100_000, 1);
    assert!(rot.pass && rot.defect <= 3.0 * rot.stderr, "{rot:?}");
    assert!(rot.integral_deviation < 0.01);
    // the pushforward density is 1/g′, so the worst box deviation is close to 2π·0.01
    let tau = 2.0 * std::f64::consts::PI;
    let g = |x: f64| x + 0.01 * (tau * x).sin();
    let rep = almost_mp_check(g, uniform_sampler, lebesgue, &equal_boxes(50), 0.1, 400_000, 2);
    assert!(rep.pass);
    assert!(rep.defect > 0.04 && rep.defect < 0.0628 + 3.0 * rep.stderr, "{rep:?}");
    let strict = almost_mp_check(g, uniform_sampler, lebesgue, &equal_boxes(50), 0.0, 400_000, 2);
    assert!(!strict.pass);
}

#[test]
fn towers_are_certified() {
    let ctx = golden();
    let roof = RoofFunction::kochergin_default();
    let t = build_rokhlin_towers_at(&Sequential, &ctx, &roof, 14, &TowerConfig::default()).unwrap();
    let rec = &t.record;
    assert!(rec.certified);
    assert_eq!(rec.collisions, 0);
    assert!(rec.uncovered <= rec.uncovered_bound);
    assert!(rec.mass > 0.0 && rec.mass <= 1.0);
    for (tower, check) in [(&t.first, rec.checks[0]), (&t.second, rec.checks[1])] {
        if let Some(c) = check {
            assert!(c.min_sum >= tower.height, "{c:?}");
        } else {
            assert!(tower.base.is_empty());
            assert!(!rec.notes.is_empty());
        }
    }
    let flat = RoofFunction::constant(1.0);
    let t = build_rokhlin_towers_at(&Sequential, &ctx, &flat, 10, &TowerConfig::default()).unwrap();
    assert!(t.record.certified && t.record.collisions == 0);
    assert!(build_rokhlin_towers_at(&Sequential, &ctx, &roof, 1, &TowerConfig::default()).is_err());
    let bad = TowerConfig { eta: -0.1, ..TowerConfig::default() };
    assert!(build_rokhlin_towers_at(&Sequential, &ctx, &roof, 12, &bad).is_err());
}

fn accounted(p: &Preliminary) -> f64 {
    p.partition.covered + p.losses.iter().map(|l| l.measure).sum::<f64>()
}

#[test]
fn preliminary_branches_and_accounting() {
    let params = ShearParams { trim_exp: 2.0, refine_exp: 2.0, ..ShearParams::default() };
    // golden mean: q_{n+1}/q_n is never large, so the long-atom branch applies
    let p = build_preliminary_partition(&golden(), 3e3, 0.3, &params).unwrap();
    assert_eq!(p.branch, Branch::R2b);
    assert_eq!(p.points as u128, p.q_next);
    assert_eq!(p.ndis_violations, 0);
    assert!((accounted(&p) - 1.0).abs() < 1e-9);
    p.partition.verify().unwrap();

    // a partial quotient of 200 followed by 1 gives the first branch
    let big = expand_cf(&AlphaSpec::Periodic { pre: vec![], period: vec![200, 1] }, 20).unwrap();
    let p = build_preliminary_partition(&big, 28_300.0, 0.3, &params).unwrap();
    assert_eq!(p.branch, Branch::R1);
    assert_eq!(p.ndis_violations, 0);
    assert!((accounted(&p) - 1.0).abs() < 1e-9);
    let p = build_preliminary_partition(&big, 5e4, 0.3, &ShearParams { short_exp: 1.0, ..params }).unwrap();
    assert_eq!(p.branch, Branch::R2a);
    assert!((accounted(&p) - 1.0).abs() < 1e-9);

    assert!(build_preliminary_partition(&golden(), 3e3, 1.0, &params).is_err());
    assert!(matches!(build_preliminary_partition(&golden(), 1.0, 0.3, &params), Err(Error::TooSmall { .. })));
}

fn small_instance() -> (AlphaContext, RoofFunction, Preliminary, Refined) {
    let ctx = golden();
    let roof = RoofFunction::kochergin_default();
    let params = ShearParams { trim_exp: 2.0, piece_exp: 1.0, ..ShearParams::default() };
    let p = build_preliminary_partition(&ctx, 3e3, 0.3, &params).unwrap();
    let r = refine_to_stretching(&Sequential, &ctx, &roof, &p).unwrap();
    (ctx, roof, p, r)
}

fn prefix(p: &AlmostPartition, n: usize) -> AlmostPartition {
    AlmostPartition::measured(p.atoms[..n].to_vec(), p.anchors.as_ref().map(|a| a[..n].to_vec())).unwrap()
}

#[test]
fn refinement_output_satisfies_its_own_checker() {
    let (ctx, roof, p, r) = small_instance();
    assert!(!r.partition.is_empty());
    assert!(r.report.all_pass());
    r.partition.verify().unwrap();
    let cfg = CheckConfig::default();
    let again = check_j(&Sequential, &ctx, &roof, &r.partition, p.t, r.k_of_t, &cfg).unwrap();
    assert!(again.all_pass());
    assert_eq!(again.atoms_total, r.partition.len());
    assert!((again.covered - r.partition.covered).abs() < 1e-12);
    assert!(r.partition.covered <= p.partition.covered + 1e-12);
}

#[test]
fn constant_roof_has_no_stretch() {
    let ctx = golden();
    let flat = RoofFunction::constant(1.0);
    let params = ShearParams { trim_exp: 2.0, piece_exp: 1.0, ..ShearParams::default() };
    let p = build_preliminary_partition(&ctx, 3e3, 0.3, &params).unwrap();
    let r = refine_to_stretching(&Sequential, &ctx, &flat, &p).unwrap();
    assert!(r.partition.is_empty());
    assert!(r.report.notes.iter().any(|n| n.contains("stretch")), "{:?}", r.report.notes);
}

#[test]
fn j_checker_flags_long_atoms_and_accepts_empty() {
    let ctx = golden();
    let roof = RoofFunction::kochergin_default();
    let cfg = CheckConfig::default();
    let t = 3e3;
    let k = k_of_t(&ctx, &roof, t, &ShearParams::default()).unwrap();
    let n = kochergin_core::arithmetic::denominator_bracket(t, &ctx, 1.0 + Kappa::LogLog.eval(t)).unwrap();
    // an atom of length ~1/q_n straddles many ergodic-sum scales
    let a = CircleInterval::new(CirclePoint::from_f64(0.3), u128::MAX / ctx.q[n]).unwrap();
    let p = AlmostPartition::measured(vec![a], None).unwrap();
    let rep = check_j(&Sequential, &ctx, &roof, &p, t, k, &cfg).unwrap();
    assert!(!rep.all_pass());
    assert!(rep.summary(Condition::J3).unwrap().failed > 0 || rep.summary(Condition::J1).unwrap().failed > 0, "{:?}", rep.summaries);

    let rep = check_j(&Sequential, &ctx, &roof, &AlmostPartition::empty(), t, k, &cfg).unwrap();
    assert!(rep.empty && rep.all_pass());
    assert_eq!(rep.atoms_total, 0);
}

#[test]
fn p_partition_meets_p_conditions() {
    let (ctx, roof, p, r) = small_instance();
    let sub = prefix(&r.partition, 60);
    let m = (p.q_n as f64).powf(roof.gamma / 2.0) * Kappa::LogLog.eval(p.t);
    let cfg = CheckConfig { slack: 0.1, ..CheckConfig::default() };
    let (pp, losses) = p_partition(&Sequential, &ctx, &roof, &sub, p.t, m, &cfg).unwrap();
    assert!(!pp.is_empty());
    pp.verify().unwrap();
    let lost: f64 = losses.iter().map(|l| l.measure).sum();
    assert!((pp.covered + lost - sub.covered).abs() < 1e-12);
    let rep = check_p(&Sequential, &ctx, &roof, &pp, p.t, m, 0.3, &cfg).unwrap();
    for s in &rep.summaries {
        assert_eq!(s.failed, 0, "{s:?}");
    }
    assert!(p_partition(&Sequential, &ctx, &roof, &sub, p.t, 1.5, &cfg).is_err());

    // with a tiny M the atoms leave V_M and P2 names a witness
    let rep = check_p(&Sequential, &ctx, &roof, &pp, p.t, 1.05, 0.3, &cfg).unwrap();
    let p2 = rep.summary(Condition::P2).unwrap();
    assert!(p2.failed > 0);
    let w = p2.worst.unwrap();
    assert!(!w.pass && w.margin < 0.0);
    assert!((0.0..1.0).contains(&w.witness_x));
}

#[test]
fn constant_roof_fails_the_variation_condition() {
    let (ctx, _, p, r) = small_instance();
    let flat = RoofFunction::constant(1.0);
    let sub = prefix(&r.partition, 20);
    let rep = check_p(&Sequential, &ctx, &flat, &sub, p.t, 4.0, 0.3, &CheckConfig::default()).unwrap();
    assert!(rep.summary(Condition::P4).unwrap().failed > 0, "{:?}", rep.summaries);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn refinement_bound_holds(seed in any::<u64>(), na in 1usize..30, nb in 1usize..30, delta in 0.0f64..0.1, eps0 in 0.0f64..0.3) {
        let mut r = rng::stream(seed, 99, 0);
        let p = random_partial_partition(&mut r, na, delta).unwrap();
        let q = random_partial_partition(&mut r, nb, delta).unwrap();
        let rf = combinatorial_refinement(&p, &q, eps0).unwrap();
        rf.partition.verify().unwrap();
        prop_assert!(rf.partition.covered >= rf.bound - 1e-12);
    }
}
