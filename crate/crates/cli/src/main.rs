use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kochergin::config::*;
use kochergin::pool::Pool;
use kochergin::run::{core_err, run};
use kochergin::{replay, CliError};
use kochergin_core::arithmetic::expand_cf;
use kochergin_core::Error;

#[derive(Parser)]
#[command(name = "kochergin", version, about = "Numerical lab for special flows over irrational rotations with singular roofs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// `golden`, `sqrt2`, `periodic:a1,a2,...`, `periodic:p1,..|a1,..` or a decimal in (0,1).
    #[arg(long, global = true, default_value = "golden")]
    alpha: String,
    /// Partial quotients to compute (default 60, or the safe depth of a decimal).
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Roof as JSON, a path to a JSON file, `default` or `constant`.
    #[arg(long, global = true, default_value = "default")]
    roof: String,
    /// Integer seed or `random`.
    #[arg(long, global = true, default_value = "1")]
    seed: String,
    /// Worker threads (default: $KOCHERGIN_WORKERS, else all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write artifacts into this directory instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Continued-fraction table {a_k, p_k, q_k}.
    Cf,
    /// Birkhoff sums S_N along a geometric range of N (CSV).
    Birkhoff(BirkhoffArgs),
    /// Image of a point under the special flow, or a CSV trace.
    Flow(FlowArgs),
    /// Stretching partition with a condition check (JSON report + CSV atoms).
    Partition(PartitionArgs),
    /// Two Rokhlin towers with certified level disjointness.
    Towers(TowersArgs),
    /// k-correlations on a time grid with a decay fit.
    Correlate(CorrelateArgs),
    /// Randomized and deterministic verification suites.
    Verify {
        #[command(subcommand)]
        suite: VerifyTask,
    },
    /// Re-run the config recorded in an artifact and compare byte for byte.
    Replay { file: PathBuf },
}

const DEFAULT_NMAX: usize = 60;

fn config(g: &Global, task: Task) -> Result<RunConfig, CliError> {
    let spec = parse_alpha(&g.alpha)?;
    let n_max = match g.nmax {
        Some(n) => n,
        None => match expand_cf(&spec, DEFAULT_NMAX) {
            Ok(_) => DEFAULT_NMAX,
            Err(Error::InsufficientPrecision { largest_safe, .. }) => largest_safe,
            Err(e) => return Err(core_err(e)),
        },
    };
    let (seed, drawn) = parse_seed(&g.seed)?;
    if drawn {
        eprintln!("seed: {seed}");
    }
    Ok(RunConfig { alpha: spec.to_string(), n_max, roof: parse_roof(&g.roof)?, seed, workers: resolve_workers(g.workers)?, task })
}

fn main_inner(cli: Cli) -> Result<bool, CliError> {
    let g = &cli.global;
    let task = match cli.cmd {
        Cmd::Replay { file } => {
            let bytes = std::fs::read(&file).map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?;
            let r = replay(&bytes, g.workers)?;
            match r.matched {
                Some(name) => eprintln!("replay: identical ({name}, {} workers)", r.workers),
                None => eprintln!("replay: artifact differs from the regenerated output"),
            }
            return Ok(r.identical);
        }
        Cmd::Cf => Task::Cf,
        Cmd::Birkhoff(a) => Task::Birkhoff(a),
        Cmd::Flow(a) => Task::Flow(a),
        Cmd::Partition(a) => Task::Partition(a),
        Cmd::Towers(a) => Task::Towers(a),
        Cmd::Correlate(a) => Task::Correlate(a),
        Cmd::Verify { suite } => Task::Verify { suite },
    };
    let cfg = config(g, task)?;
    let pool = Pool::new(cfg.workers).map_err(|e| CliError::Runtime(e.to_string()))?;
    let out = run(&cfg, &pool)?;
    let io = |e: std::io::Error| CliError::Runtime(e.to_string());
    match &g.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io)?;
            for a in &out.artifacts {
                let path = dir.join(&a.name);
                std::fs::write(&path, &a.bytes).map_err(io)?;
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for a in &out.artifacts {
                stdout.write_all(&a.bytes).map_err(io)?;
            }
            stdout.flush().map_err(io)?;
        }
    }
    eprintln!("{}", out.summary);
    Ok(out.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
