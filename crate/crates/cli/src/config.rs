//! Run configuration: everything a subcommand needs, serialized into the
//! header of every artifact so the run can be replayed.

use clap::{Args, Subcommand, ValueEnum};
use kochergin_core::arithmetic::AlphaSpec;
use kochergin_core::birkhoff::Kappa;
use kochergin_core::flow::Observable;
use kochergin_core::roof::RoofFunction;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub alpha: String,
    pub n_max: usize,
    pub roof: RoofFunction,
    pub seed: u64,
    pub workers: usize,
    pub task: Task,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Task {
    Cf,
    Birkhoff(BirkhoffArgs),
    Flow(FlowArgs),
    Partition(PartitionArgs),
    Towers(TowersArgs),
    Correlate(CorrelateArgs),
    Verify { suite: VerifyTask },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Cf => "cf",
            Task::Birkhoff(_) => "birkhoff",
            Task::Flow(_) => "flow",
            Task::Partition(_) => "partition",
            Task::Towers(_) => "towers",
            Task::Correlate(_) => "correlate",
            Task::Verify { suite } => suite.name(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Derivative {
    Phi,
    Phi1,
    Phi2,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffArgs {
    /// Base point in [0,1).
    #[arg(long, default_value_t = 0.317)]
    pub x: f64,
    /// Largest |N|; negative values sum backwards.
    #[arg(long, default_value_t = 1_000_000, allow_negative_numbers = true)]
    pub n: i64,
    /// Number of N values, geometrically spaced in 1..=|n|.
    #[arg(long, default_value_t = 40)]
    pub rows: usize,
    #[arg(long, value_enum, default_value_t = Derivative::Phi)]
    pub derivative: Derivative,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowArgs {
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    /// Emit the orbit every `dt` time units as CSV (t, x, r).
    #[arg(long)]
    pub trace: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum CheckFamily {
    #[value(name = "J")]
    J,
    #[value(name = "P")]
    P,
    #[value(name = "QJ")]
    QJ,
    #[value(name = "QP")]
    QP,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionArgs {
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 0.3)]
    pub epsilon: f64,
    /// `loglog` for 1/log log(t + e^e), or a constant.
    #[arg(long, default_value = "loglog", value_parser = parse_kappa)]
    pub kappa: Kappa,
    #[arg(long, value_enum, default_value_t = CheckFamily::J)]
    pub check: CheckFamily,
    /// M for (P)/(QP); defaults to q_n^{γ/2}·κ(t).
    #[arg(long)]
    pub m: Option<f64>,
    /// ξ for (QP).
    #[arg(long, default_value_t = 0.1)]
    pub xi: f64,
    /// ξ′ for (QJ).
    #[arg(long, default_value_t = 0.05)]
    pub xi_prime: f64,
    /// Relative slack on every checked threshold.
    #[arg(long, default_value_t = 0.0)]
    pub slack: f64,
    #[arg(long)]
    pub trim_exp: Option<f64>,
    #[arg(long)]
    pub piece_exp: Option<f64>,
    #[arg(long)]
    pub k_exp: Option<f64>,
    #[arg(long)]
    pub short_exp: Option<f64>,
    #[arg(long)]
    pub refine_exp: Option<f64>,
    #[arg(long)]
    pub max_atoms: Option<usize>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowersArgs {
    /// Denominator index; otherwise chosen from --t and --xi by q_n ≤ t^{4ξ}.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub xi: f64,
    #[arg(long, default_value_t = 0.2)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_height: f64,
    #[arg(long, default_value_t = 20_000)]
    pub mc_samples: usize,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelateArgs {
    /// Order of the correlation; times are (0, t, 2t, ...).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Explicit grid t1,t2,...
    #[arg(long, value_delimiter = ',', conflicts_with = "grid")]
    pub times: Option<Vec<f64>>,
    /// `geometric:t0,t1,factor`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Observable as JSON, e.g. {"kind":"BoxBump","x0":0.5,"r0":0.11,"rx":0.45,"rr":0.105}.
    #[arg(long, value_parser = parse_observable, default_value = DEFAULT_OBSERVABLE)]
    pub observable: Observable,
    #[arg(long, default_value_t = 1)]
    pub stratification: usize,
}

pub const DEFAULT_OBSERVABLE: &str = r#"{"kind":"BoxBump","x0":0.5,"r0":0.11,"rx":0.45,"rr":0.105}"#;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t0: f64,
    pub t1: f64,
    pub factor: f64,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "kebab-case")]
pub enum VerifyTask {
    /// Ergodic-sum estimates ES0–ES4.
    Es {
        #[arg(long, default_value_t = 3)]
        n_lo: usize,
        #[arg(long, default_value_t = 18)]
        n_hi: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0.2)]
        slack: f64,
    },
    /// Van der Corput inequality on random vectors.
    Vdc {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Sufficient uniform-stretching criterion against the definition.
    Us {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Intersection and refinement lemmas for almost partitions.
    ParLemma {
        #[arg(long, default_value_t = 1000)]
        instances: usize,
    },
    /// Horocycle/geodesic commutation and the shear bound.
    Gus {
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long, default_value_t = 1e2)]
        t_min: f64,
        #[arg(long, default_value_t = 1e6)]
        t_max: f64,
        #[arg(long, default_value_t = 1.778_279_410_038_922_8)]
        factor: f64,
        #[arg(long, default_value_t = 21)]
        s_points: usize,
        /// Random base points near the identity (0 means the identity only).
        #[arg(long, default_value_t = 20)]
        x_samples: usize,
    },
    /// Composition, inverse, canonical range and measure preservation of the flow.
    FlowProps {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 20_000)]
        measure_samples: usize,
        #[arg(long, default_value_t = 1e3)]
        time_bound: f64,
    },
}

impl VerifyTask {
    pub fn name(&self) -> &'static str {
        match self {
            VerifyTask::Es { .. } => "verify-es",
            VerifyTask::Vdc { .. } => "verify-vdc",
            VerifyTask::Us { .. } => "verify-us",
            VerifyTask::ParLemma { .. } => "verify-par-lemma",
            VerifyTask::Gus { .. } => "verify-gus",
            VerifyTask::FlowProps { .. } => "verify-flow-props",
        }
    }
}

pub fn parse_kappa(s: &str) -> Result<Kappa, String> {
    match s.trim() {
        "loglog" => Ok(Kappa::LogLog),
        v => match v.parse::<f64>() {
            Ok(k) if k > 0.0 && k.is_finite() => Ok(Kappa::Constant(k)),
            _ => Err(format!("expected `loglog` or a positive number, got `{s}`")),
        },
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let body = s.strip_prefix("geometric:").ok_or_else(|| format!("expected geometric:t0,t1,factor, got `{s}`"))?;
    let v: Vec<f64> = body.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [t0, t1, factor] if t0 > 0.0 && t1 >= t0 && factor > 1.0 => Ok(Grid { t0, t1, factor }),
        _ => Err(format!("need 0 < t0 <= t1 and factor > 1 in `{s}`")),
    }
}

pub fn parse_observable(s: &str) -> Result<Observable, String> {
    let de = &mut serde_json::Deserializer::from_str(s);
    serde_path_to_error::deserialize(de).map_err(|e| format!("observable: field `{}`: {}", e.path(), e.inner()))
}

pub fn parse_alpha(s: &str) -> Result<AlphaSpec, CliError> {
    s.parse::<AlphaSpec>().map_err(|e| CliError::Config(format!("alpha: {e}")))
}

const ROOF_FIELDS: [&str; 7] = ["family", "gamma", "A_plus", "A_minus", "c", "lambda", "guard"];

/// `default`, `constant`, a JSON object, or a path to a JSON file.
pub fn parse_roof(arg: &str) -> Result<RoofFunction, CliError> {
    let text = match arg.trim() {
        "default" => return Ok(RoofFunction::kochergin_default()),
        "constant" => return Ok(RoofFunction::constant(1.0)),
        t if t.starts_with('{') => t.to_string(),
        path => std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("roof: cannot read `{path}`: {e}")))?,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("roof: malformed JSON: {e}")))?;
    if let Some(obj) = value.as_object() {
        if let Some(k) = obj.keys().find(|k| !ROOF_FIELDS.contains(&k.as_str())) {
            return Err(CliError::Config(format!("roof: field `{k}`: unknown field, expected one of {}", ROOF_FIELDS.join(", "))));
        }
    }
    let roof: RoofFunction = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Config(format!("roof: {inner}"))
        } else {
            CliError::Config(format!("roof: field `{path}`: {inner}"))
        }
    })?;
    roof.validate().map_err(|e| CliError::Config(format!("roof: {e}")))?;
    Ok(roof)
}

/// `random` draws a seed from the OS-seeded hasher; the caller prints it.
pub fn parse_seed(s: &str) -> Result<(u64, bool), CliError> {
    if s == "random" {
        use std::hash::{BuildHasher, Hasher};
        let mut h = std::collections::hash_map::RandomState::new().build_hasher();
        h.write_u128(std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0));
        return Ok((h.finish(), true));
    }
    s.parse::<u64>().map(|v| (v, false)).map_err(|_| CliError::Config(format!("seed: expected an integer or `random`, got `{s}`")))
}

/// Worker count: flag, then KOCHERGIN_WORKERS, then the available parallelism.
pub fn resolve_workers(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(w) = flag {
        return if w == 0 { Err(CliError::Config("workers: must be at least 1".into())) } else { Ok(w) };
    }
    if let Ok(v) = std::env::var("KOCHERGIN_WORKERS") {
        return match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(CliError::Config(format!("KOCHERGIN_WORKERS: expected a positive integer, got `{v}`"))),
        };
    }
    Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}
