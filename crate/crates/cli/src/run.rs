//! Subcommand drivers. Each returns its artifacts and a pass flag; nothing
//! here touches the filesystem.

use kochergin_core::arithmetic::{classify_diophantine, expand_cf, AlphaContext, CirclePoint};
use kochergin_core::birkhoff::{fast_block_sum, verify_es_with, EsConfig};
use kochergin_core::flow::{evolve, verify_flow_props, FlowPoint, FlowPropsConfig, SamplerConfig};
use kochergin_core::gus::{commutation_grid, identity_neighbourhood, shear_bound_scan};
use kochergin_core::mixing::{correlate_many, equally_spaced, fit_estimates, geometric_grid, oscillation_flag, vdc_suite};
use kochergin_core::rng::{self, tag};
use kochergin_core::roof::Selector;
use kochergin_core::shear::{
    build_preliminary_partition, build_rokhlin_towers, build_rokhlin_towers_at, check_j, check_p, check_qj, check_qp, p_partition, par_lemma_suite,
    refine_to_stretching, us_suite, CheckConfig, ShearParams, StretchReport, TowerConfig,
};
use kochergin_core::Error;
use serde::Serialize;
use serde_json::json;

use crate::artifact::{self, num, Artifact, Header};
use crate::config::*;
use crate::pool::Pool;
use crate::CliError;

pub struct Outcome {
    pub pass: bool,
    pub artifacts: Vec<Artifact>,
    /// One-line result for stderr.
    pub summary: String,
}

/// Errors caused by the inputs map to exit code 2, everything else to 1.
pub fn core_err(e: Error) -> CliError {
    match e {
        Error::RationalInput { .. }
        | Error::InsufficientPrecision { .. }
        | Error::InvalidAlpha(_)
        | Error::DenominatorOverflow(_)
        | Error::OutOfTable { .. }
        | Error::NonIntegrable(_)
        | Error::InvalidParameter { .. }
        | Error::TooSmall { .. }
        | Error::InsufficientSamples { .. }
        | Error::Precondition(_) => CliError::Config(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

pub fn context(config: &RunConfig) -> Result<AlphaContext, CliError> {
    let spec = parse_alpha(&config.alpha)?;
    expand_cf(&spec, config.n_max).map_err(core_err)
}

pub fn run(config: &RunConfig, pool: &Pool) -> Result<Outcome, CliError> {
    config.roof.validate().map_err(|e| CliError::Config(format!("roof: {e}")))?;
    let ctx = context(config)?;
    let header = Header::new(config);
    let name = config.task.name();
    let out = match &config.task {
        Task::Cf => cf(config, &ctx, &header),
        Task::Birkhoff(a) => birkhoff(config, &ctx, &header, pool, a),
        Task::Flow(a) => flow(config, &ctx, &header, a),
        Task::Partition(a) => partition(config, &ctx, &header, pool, a),
        Task::Towers(a) => towers(config, &ctx, &header, pool, a),
        Task::Correlate(a) => correlate(config, &ctx, &header, pool, a),
        Task::Verify { suite } => verify(config, &ctx, &header, pool, suite),
    }?;
    Ok(Outcome { summary: format!("{name}: {}", out.summary), ..out })
}

fn done(pass: bool, artifacts: Vec<Artifact>, summary: impl Into<String>) -> Result<Outcome, CliError> {
    Ok(Outcome { pass, artifacts, summary: summary.into() })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn cf(config: &RunConfig, ctx: &AlphaContext, h: &Header) -> Result<Outcome, CliError> {
    let data = json!({
        "alpha": ctx.spec.to_string(),
        "a_k": ctx.quotients,
        "p_k": ctx.p,
        "q_k": ctx.q,
        "precision": ctx.precision,
        "diophantine": classify_diophantine(ctx, config.roof.v_exponent()),
    });
    done(true, vec![artifact::json(h, "cf", &data)?], format!("{} partial quotients", ctx.quotients.len()))
}

/// 1 = n_0 < n_1 < ... ≤ n, roughly geometric.
fn geometric_ns(n: u64, rows: usize) -> Vec<u64> {
    let rows = rows.max(2);
    let mut v: Vec<u64> = (0..rows).map(|i| ((n as f64).powf(i as f64 / (rows - 1) as f64)).round() as u64).collect();
    v.push(n);
    v.retain(|&k| k >= 1 && k <= n);
    v.sort_unstable();
    v.dedup();
    v
}

fn birkhoff(config: &RunConfig, ctx: &AlphaContext, h: &Header, pool: &Pool, a: &BirkhoffArgs) -> Result<Outcome, CliError> {
    if !(0.0..1.0).contains(&a.x) {
        return Err(CliError::Config(format!("x: must lie in [0,1), got {}", a.x)));
    }
    let sel = match a.derivative {
        Derivative::Phi => Selector::Phi,
        Derivative::Phi1 => Selector::Phi1,
        Derivative::Phi2 => Selector::Phi2,
    };
    let sign = if a.n < 0 { -1 } else { 1 };
    let ns = geometric_ns(a.n.unsigned_abs(), a.rows);
    let x = CirclePoint::from_f64(a.x);
    use kochergin_core::exec::Executor;
    let res = pool.map(ns.len(), |i| fast_block_sum(&config.roof, sel, x, sign * ns[i] as i64, ctx));
    let mut rows = Vec::with_capacity(ns.len());
    let mut hits = 0;
    for (n, r) in ns.iter().zip(res) {
        let n = sign * *n as i64;
        match r {
            Ok(b) => rows.push(vec![n.to_string(), num(b.value), num(b.min_distance), num(b.error_bound)]),
            Err(Error::SingularityProximity { distance, .. }) => {
                hits += 1;
                rows.push(vec![n.to_string(), "NaN".into(), num(distance), "NaN".into()]);
            }
            Err(e) => return Err(core_err(e)),
        }
    }
    let csv = artifact::csv(h, "birkhoff", &["N", "S_N", "x_min", "error_bound"], &rows)?;
    done(true, vec![csv], format!("{} rows, {hits} guard hits", rows.len()))
}

fn flow(config: &RunConfig, ctx: &AlphaContext, h: &Header, a: &FlowArgs) -> Result<Outcome, CliError> {
    let roof = &config.roof;
    if !(0.0..1.0).contains(&a.x) {
        return Err(CliError::Config(format!("x: must lie in [0,1), got {}", a.x)));
    }
    let x = CirclePoint::from_f64(a.x);
    let top = roof.eval(x, 0).map_err(core_err)?;
    if !(a.r >= 0.0 && a.r < top) {
        return Err(CliError::Config(format!("r: must lie in [0, Φ(x)) = [0, {top}), got {}", a.r)));
    }
    if !a.t.is_finite() {
        return Err(CliError::Config("t: must be finite".into()));
    }
    let p = FlowPoint::new(x, a.r);
    let go = |t: f64| evolve(roof, ctx, p, t).map_err(core_err);
    match a.trace {
        None => {
            let q = go(a.t)?;
            let data = json!({ "x": a.x, "r": a.r, "t": a.t, "image": { "x": q.x.to_f64(), "r": q.r } });
            done(true, vec![artifact::json(h, "flow", &data)?], format!("image ({}, {})", q.x.to_f64(), q.r))
        }
        Some(dt) => {
            if !(dt > 0.0) {
                return Err(CliError::Config(format!("trace: dt must be positive, got {dt}")));
            }
            let steps = (a.t.abs() / dt).floor() as u64;
            if steps > 10_000_000 {
                return Err(CliError::Config(format!("trace: {steps} steps exceed 10^7")));
            }
            let sign = a.t.signum();
            let mut times: Vec<f64> = (0..=steps).map(|k| sign * k as f64 * dt).collect();
            if times.last() != Some(&a.t) {
                times.push(a.t);
            }
            let mut rows = Vec::with_capacity(times.len());
            for &t in &times {
                let q = go(t)?;
                rows.push(vec![num(t), num(q.x.to_f64()), num(q.r)]);
            }
            done(true, vec![artifact::csv(h, "flow", &["t", "x", "r"], &rows)?], format!("{} trace points", rows.len()))
        }
    }
}

#[derive(Serialize)]
struct PreliminarySummary {
    branch: String,
    n: usize,
    q_n: u128,
    q_next: u128,
    k: u64,
    kappa: f64,
    s: f64,
    points: u64,
    atoms: usize,
    covered: f64,
    paper_bound: f64,
    ndis_violations: usize,
    losses: Vec<kochergin_core::shear::Loss>,
}

fn verdict_cell(r: &kochergin_core::shear::AtomRecord) -> String {
    r.verdicts.iter().map(|v| format!("{:?}:{}", v.cond, if v.pass { "pass" } else { "fail" })).collect::<Vec<_>>().join(";")
}

fn partition(config: &RunConfig, ctx: &AlphaContext, h: &Header, pool: &Pool, a: &PartitionArgs) -> Result<Outcome, CliError> {
    let roof = &config.roof;
    let d = ShearParams::default();
    let params = ShearParams {
        kappa: a.kappa,
        trim_exp: a.trim_exp.unwrap_or(d.trim_exp),
        piece_exp: a.piece_exp.unwrap_or(d.piece_exp),
        k_exp: a.k_exp.unwrap_or(d.k_exp),
        short_exp: a.short_exp.unwrap_or(d.short_exp),
        refine_exp: a.refine_exp.unwrap_or(d.refine_exp),
        max_atoms: a.max_atoms.unwrap_or(d.max_atoms),
        ..d
    };
    let prelim = build_preliminary_partition(ctx, a.t, a.epsilon, &params).map_err(core_err)?;
    let refined = refine_to_stretching(pool, ctx, roof, &prelim).map_err(core_err)?;
    let cfg = CheckConfig { kappa: a.kappa, slack: a.slack, n_window: params.n_window, record_limit: params.record_limit, ..CheckConfig::default() };
    let m = a.m.unwrap_or_else(|| (prelim.q_n as f64).powf(roof.v_exponent() / 2.0) * a.kappa.eval(a.t));
    let p_part = |m: f64| p_partition(pool, ctx, roof, &refined.partition, a.t, m, &cfg).map_err(core_err);
    let mut report: StretchReport = match a.check {
        CheckFamily::J => check_j(pool, ctx, roof, &refined.partition, a.t, refined.k_of_t, &cfg),
        CheckFamily::QJ => check_qj(pool, ctx, roof, &refined.partition, a.t, a.xi_prime, a.epsilon, &cfg),
        CheckFamily::P => {
            let (pp, losses) = p_part(m)?;
            check_p(pool, ctx, roof, &pp, a.t, m, a.epsilon, &cfg).map(|mut r| {
                r.ledger.extend(losses);
                r
            })
        }
        CheckFamily::QP => {
            let (pp, losses) = p_part(m)?;
            check_qp(pool, ctx, roof, &pp, a.t, m, a.xi, &cfg).map(|mut r| {
                r.ledger.extend(losses);
                r
            })
        }
    }
    .map_err(core_err)?;
    let rows: Vec<Vec<String>> = report
        .atoms
        .iter()
        .map(|r| vec![num(r.left), num(r.length), r.n_min.to_string(), r.n_max.to_string(), num(r.stretch), num(r.distortion), verdict_cell(r)])
        .collect();
    report.atoms.clear();
    let summary = PreliminarySummary {
        branch: format!("{:?}", prelim.branch),
        n: prelim.n,
        q_n: prelim.q_n,
        q_next: prelim.q_next,
        k: prelim.k,
        kappa: prelim.kappa,
        s: prelim.s,
        points: prelim.points,
        atoms: prelim.partition.len(),
        covered: prelim.partition.covered,
        paper_bound: prelim.paper_bound,
        ndis_violations: prelim.ndis_violations,
        losses: prelim.losses.clone(),
    };
    let pass = report.all_pass();
    let line = format!(
        "{} atoms checked, {} passed, covered {:.4} (refined {:.4}), branch {:?}",
        report.atoms_total, report.atoms_passed, report.covered, refined.partition.covered, prelim.branch
    );
    let data = json!({
        "preliminary": summary,
        "k_of_t": refined.k_of_t,
        "m": m,
        "refined_covered": refined.partition.covered,
        "report": report,
    });
    let json = artifact::json(h, "partition", &data)?;
    let csv = artifact::csv(h, "partition-atoms", &["left", "length", "N_min", "N_max", "stretch", "distortion", "verdicts"], &rows)?;
    done(pass, vec![json, csv], format!("{} ({line})", verdict(pass)))
}

fn towers(config: &RunConfig, ctx: &AlphaContext, h: &Header, pool: &Pool, a: &TowersArgs) -> Result<Outcome, CliError> {
    let cfg = TowerConfig { eta: a.eta, c_height: a.c_height, mc_samples: a.mc_samples, seed: config.seed, ..TowerConfig::default() };
    let t = match (a.n, a.t) {
        (Some(n), _) => build_rokhlin_towers_at(pool, ctx, &config.roof, n, &cfg),
        (None, Some(t)) => build_rokhlin_towers(pool, ctx, &config.roof, t, a.eta, a.xi, &cfg),
        (None, None) => return Err(CliError::Config("towers: give --n or --t".into())),
    };
    let t = match t {
        Ok(t) => t,
        Err(e @ Error::TowerOverlap { .. }) => {
            let data = json!({ "certified": false, "error": e.to_string() });
            return done(false, vec![artifact::json(h, "towers", &data)?], format!("FAIL ({e})"));
        }
        Err(e) => return Err(core_err(e)),
    };
    let r = &t.record;
    let pass = r.certified && r.collisions == 0 && r.uncovered <= r.uncovered_bound;
    let line = format!("{} (n = {}, uncovered {:.4} <= {:.4}, {} collisions)", verdict(pass), r.n, r.uncovered, r.uncovered_bound, r.collisions);
    done(pass, vec![artifact::json(h, "towers", &t)?], line)
}

fn correlate(config: &RunConfig, ctx: &AlphaContext, h: &Header, pool: &Pool, a: &CorrelateArgs) -> Result<Outcome, CliError> {
    if a.k < 2 {
        return Err(CliError::Config("k: need k >= 2 for a decay curve".into()));
    }
    let grid = match (&a.times, &a.grid) {
        (Some(t), _) => t.clone(),
        (None, Some(g)) => geometric_grid(g.t0, g.t1, g.factor).map_err(core_err)?,
        (None, None) => return Err(CliError::Config("correlate: give --times or --grid".into())),
    };
    if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0)) {
        return Err(CliError::Config("times: need positive times".into()));
    }
    let tuples = equally_spaced(a.k, &grid);
    let observables = vec![a.observable; a.k];
    let scfg = SamplerConfig { seed: config.seed, n_samples: a.samples, stratification: a.stratification, ..SamplerConfig::default() };
    let ests = correlate_many(pool, &config.roof, ctx, &observables, &tuples, &scfg).map_err(core_err)?;
    let rows: Vec<Vec<String>> = ests.iter().map(|e| vec![num(e.times[1]), num(e.estimate), num(e.stderr), num(e.dropped_fraction)]).collect();
    let (fit, fit_error) = match fit_estimates(&ests, 1) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let values: Vec<f64> = ests.iter().map(|e| e.estimate).collect();
    let data = json!({
        "k": a.k,
        "fit": fit,
        "fit_error": fit_error,
        "oscillation": oscillation_flag(&values),
        "flagged_points": ests.iter().filter(|e| e.flagged).count(),
    });
    let line = match &fit {
        Some(f) => format!("eta = {:.4} ({} usable points)", f.eta, f.usable),
        None => format!("no fit: {}", fit_error.as_deref().unwrap_or("")),
    };
    let csv = artifact::csv(h, "correlate", &["t", "estimate", "stderr", "dropped"], &rows)?;
    done(true, vec![csv, artifact::json(h, "correlate-fit", &data)?], line)
}

fn verify(config: &RunConfig, ctx: &AlphaContext, h: &Header, pool: &Pool, suite: &VerifyTask) -> Result<Outcome, CliError> {
    let seed = config.seed;
    let roof = &config.roof;
    let name = suite.name();
    match *suite {
        VerifyTask::Es { n_lo, n_hi, samples, slack } => {
            let cfg = EsConfig { n_lo, n_hi, samples, slack, seed, ..EsConfig::default() };
            let rep = verify_es_with(pool, roof, ctx, &cfg).map_err(core_err)?;
            let failed: Vec<String> = rep.records.iter().filter(|r| !r.pass).map(|r| format!("{:?}", r.estimate)).collect();
            let line = if failed.is_empty() { "pass".to_string() } else { format!("FAIL ({})", failed.join(", ")) };
            done(rep.pass, vec![artifact::json(h, name, &rep)?], line)
        }
        VerifyTask::Vdc { trials } => {
            let s = vdc_suite(pool, seed, trials).map_err(core_err)?;
            let line = format!("{} ({} of {trials} violated)", verdict(s.pass), s.failures);
            done(s.pass, vec![artifact::json(h, name, &s)?], line)
        }
        VerifyTask::Us { trials, samples } => {
            let s = us_suite(pool, seed, trials, samples).map_err(core_err)?;
            let line = format!("{} ({} sufficient, {} violations)", verdict(s.pass()), s.sufficient, s.violations.len());
            done(s.pass(), vec![artifact::json(h, name, &s)?], line)
        }
        VerifyTask::ParLemma { instances } => {
            let s = par_lemma_suite(pool, seed, instances).map_err(core_err)?;
            let line = format!("{} ({} intersection, {} refinement violations)", verdict(s.pass()), s.intersect_violations, s.refinement_violations);
            done(s.pass(), vec![artifact::json(h, name, &s)?], line)
        }
        VerifyTask::Gus { points, t_min, t_max, factor, s_points, x_samples } => {
            let g = gus(seed, points, t_min, t_max, factor, s_points, x_samples)?;
            let rows: Vec<Vec<String>> = g.scan.rows.iter().map(|r| vec![num(r.t), num(r.max_distance), num(r.bound)]).collect();
            let line = format!(
                "{} (commutation ratio {:.2e}, eta {})",
                verdict(g.pass),
                g.commutation.max_ratio,
                g.scan.fit.as_ref().map(|f| format!("{:.4}", f.eta)).unwrap_or_else(|| "n/a".into())
            );
            let csv = artifact::csv(h, name, &["t", "max_distance", "bound"], &rows)?;
            done(g.pass, vec![csv, artifact::json(h, &format!("{name}-summary"), &g)?], line)
        }
        VerifyTask::FlowProps { trials, measure_samples, time_bound } => {
            let cfg = FlowPropsConfig { seed, trials, measure_samples, time_bound, ..FlowPropsConfig::default() };
            let rep = verify_flow_props(roof, ctx, &cfg).map_err(core_err)?;
            let failed: Vec<&str> = rep.suites.iter().filter(|s| !s.pass).map(|s| s.name.as_str()).collect();
            let line = if failed.is_empty() { "pass".to_string() } else { format!("FAIL ({})", failed.join(", ")) };
            done(rep.pass, vec![artifact::json(h, name, &rep)?], line)
        }
    }
}

/// Exponent window for the shear-distance fit.
pub const GUS_ETA_RANGE: (f64, f64) = (0.45, 0.55);

#[derive(Serialize)]
pub struct GusResult {
    pub commutation: kochergin_core::gus::CommutationGrid,
    pub scan: kochergin_core::gus::ShearScan,
    pub eta_in_range: bool,
    pub pass: bool,
}

pub fn gus(seed: u64, points: usize, t_min: f64, t_max: f64, factor: f64, s_points: usize, x_samples: usize) -> Result<GusResult, CliError> {
    let commutation = commutation_grid(seed, points);
    let grid = geometric_grid(t_min, t_max, factor).map_err(core_err)?;
    let mut r = rng::stream(seed, tag::LEMMA, 4_000_000);
    let xs = identity_neighbourhood(&mut r, x_samples, 0.1);
    let scan = shear_bound_scan(&grid, &xs, s_points).map_err(core_err)?;
    let eta_in_range = scan.fit.as_ref().is_some_and(|f| f.eta >= GUS_ETA_RANGE.0 && f.eta <= GUS_ETA_RANGE.1);
    let pass = commutation.pass && scan.all_within_bound && eta_in_range;
    Ok(GusResult { commutation, scan, eta_in_range, pass })
}
