//! The `lll` command-line workbench: reads or generates instances, runs the
//! resampling algorithms over independent seeded trials, and writes a JSON
//! report.

pub mod commands;
pub mod error;
pub mod ingest;
pub mod report;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

pub use error::CliError;
pub use report::Report;

#[derive(Debug, Parser)]
#[command(name = "lll", version, about = "Local-lemma resampling experiments")]
pub struct Cli {
    /// Base seed; trial `i` uses stream `i`. LLL_SEED takes precedence.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of independent trials.
    #[arg(long, global = true, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..=100_000_000))]
    pub trials: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=4096))]
    pub jobs: Option<u64>,
    /// Resampling cap per run.
    #[arg(long, global = true, default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub cap: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full transversal of a color matrix by swapping resampling.
    Latin(LatinArgs),
    /// Partial transversal by truncated swapping resampling.
    PartialLatin(MatrixArgs),
    /// Random-permutation baseline for partial transversals.
    Stein(MatrixArgs),
    /// Non-repetitive vertex coloring.
    Nonrep(NonrepArgs),
    /// Coloring without k-fold repetitions of bounded period.
    Kthue(KthueArgs),
    /// Coloring without ρ-similar path halves.
    RhoSimilar(RhoArgs),
    /// Two-coloring of a k-uniform hypergraph.
    Hyp2col(HypArgs),
    /// Edge two-coloring of K_n without monochromatic K_k.
    Ramsey(RamseyArgs),
    /// Partial k-SAT by truncated resampling.
    KsatPartial(KsatArgs),
    /// Parallel truncated resampling on a symmetric instance.
    ParallelTruncated(ParallelArgs),
    /// Entropy lower bound for the output distribution.
    EntropyBound(EntropyArgs),
    /// Local-lemma criterion check.
    CriterionCheck(CriterionArgs),
    /// Witness-tree frequencies against their weights.
    WtlVerify(WtlArgs),
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is outside [0, 1]"))
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    let x = unit_interval(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err("must be positive".into())
    }
}

fn alpha_range(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (1.0..=std::f64::consts::E).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is outside [1, e]"))
    }
}

fn order(s: &str) -> Result<lll_core::entropy::Order, String> {
    use lll_core::entropy::Order;
    if matches!(s, "inf" | "infinity") {
        return Ok(Order::Infinity);
    }
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 1.0 && x.is_finite() {
        Ok(Order::Finite(x))
    } else {
        Err(format!("order {x} must exceed 1"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} must be positive"))
    }
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    /// Color matrix file; a random matrix per trial otherwise.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u64).range(2..=4096))]
    pub n: u64,
    /// Fraction β = Δ/n of cells sharing each color.
    #[arg(long, value_parser = open_unit)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LatinArgs {
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..=4096))]
    pub n: u64,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    pub delta: u64,
    /// Audit the bucket lists after every resampling.
    #[arg(long)]
    pub audit: bool,
    /// Run even when Δ exceeds 27n/256.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge-list file; a random graph per trial otherwise.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..=100_000))]
    pub n: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub maxdeg: u64,
    /// Color distinctly when the palette covers every vertex.
    #[arg(long)]
    pub no_shortcut: bool,
}

#[derive(Debug, Args)]
pub struct NonrepArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Palette size override.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub colors: Option<u32>,
}

#[derive(Debug, Args)]
pub struct KthueArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..=64))]
    pub k: u64,
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct RhoArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0.8, value_parser = open_unit)]
    pub rho: f64,
}

#[derive(Debug, Args)]
pub struct HypArgs {
    /// Hypergraph file; a random instance per trial otherwise.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 1600, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(2..=60))]
    pub k: u64,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,
    #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u64).range(1..))]
    pub maxdeg: u64,
    #[arg(long)]
    pub no_shortcut: bool,
    #[arg(long)]
    pub audit: bool,
    /// Accept instances whose neighborhoods exceed the admissible size.
    #[arg(long)]
    pub unchecked: bool,
}

#[derive(Debug, Args)]
pub struct RamseyArgs {
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(3..=12))]
    pub k: u64,
    /// Vertex count; the default is the size the construction targets.
    #[arg(long, value_parser = clap::value_parser!(u64).range(3..=64))]
    pub n: Option<u64>,
}

#[derive(Debug, Args)]
pub struct KsatArgs {
    /// DIMACS file; a random regular formula otherwise.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..=30))]
    pub k: u64,
    /// Occurrences per variable of the generated formula.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub l: u64,
    #[arg(long, default_value_t = 2.0, value_parser = alpha_range)]
    pub alpha: f64,
    #[arg(long)]
    pub no_shortcut: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=1000))]
    pub best_of: u64,
}

#[derive(Debug, Args)]
pub struct ParallelArgs {
    /// Event probability; defaults to α/(e·d).
    #[arg(long, value_parser = unit_interval)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=1000))]
    pub d: u64,
    #[arg(long, default_value_t = 2.0, value_parser = alpha_range)]
    pub alpha: f64,
    /// Events on the simulated ring (odd d only).
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(2..=100_000))]
    pub events: u64,
}

#[derive(Debug, Args)]
pub struct CnfSource {
    /// DIMACS file; clause-violation events over fair bits.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Clause width the file must have.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=30))]
    pub k: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub source: CnfSource,
    /// Rényi order (> 1, or `inf`).
    #[arg(long, default_value = "inf", value_parser = order)]
    pub order: lll_core::entropy::Order,
}

#[derive(Debug, Args)]
pub struct CriterionArgs {
    /// Symmetric check: event probability.
    #[arg(long, value_parser = unit_interval, requires = "d")]
    pub p: Option<f64>,
    /// Symmetric check: dependency degree.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), requires = "p")]
    pub d: Option<u64>,
    /// Family check on a DIMACS file.
    #[arg(long, conflicts_with_all = ["p", "d"])]
    pub instance: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WtlArgs {
    #[command(flatten)]
    pub source: CnfSource,
    /// Smallest tree weight checked.
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    pub min_weight: f64,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Latin(_) => "latin",
            Command::PartialLatin(_) => "partial-latin",
            Command::Stein(_) => "stein",
            Command::Nonrep(_) => "nonrep",
            Command::Kthue(_) => "kthue",
            Command::RhoSimilar(_) => "rho-similar",
            Command::Hyp2col(_) => "hyp2col",
            Command::Ramsey(_) => "ramsey",
            Command::KsatPartial(_) => "ksat-partial",
            Command::ParallelTruncated(_) => "parallel-truncated",
            Command::EntropyBound(_) => "entropy-bound",
            Command::CriterionCheck(_) => "criterion-check",
            Command::WtlVerify(_) => "wtl-verify",
        }
    }
}

/// Seed from LLL_SEED, then `--seed`, then 1.
pub fn resolve_seed(flag: Option<u64>, env: Option<String>) -> Result<(u64, &'static str), CliError> {
    if let Some(s) = env {
        let v = s.trim().parse().map_err(|_| CliError::Invalid(format!("LLL_SEED={s:?} is not an unsigned integer")))?;
        return Ok((v, "env"));
    }
    Ok(match flag {
        Some(v) => (v, "flag"),
        None => (1, "default"),
    })
}

/// Runs the command and assembles the report. `Err` only for failures that
/// leave nothing to report.
pub fn execute(cli: &Cli, env_seed: Option<String>) -> Result<(Report, Option<CliError>), CliError> {
    let (seed, origin) = resolve_seed(cli.seed, env_seed)?;
    let jobs = cli.jobs.map(|j| j as usize).unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let ctx = commands::Ctx { seed, trials: cli.trials, cap: cli.cap };
    let start = std::time::Instant::now();
    let outcome = pool.install(|| commands::dispatch(&cli.command, &ctx))?;
    let total = start.elapsed().as_secs_f64();
    let verdict = outcome.verdict();
    let trials = outcome.trials;
    let report = Report {
        command: cli.command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        instance: outcome.instance,
        seeds: report::Seeds { base: seed, origin: origin.into(), streams: trials },
        parameters: outcome.parameters,
        statistics: outcome.statistics,
        bounds: outcome.bounds,
        results: outcome.results,
        checks: outcome.checks,
        timings: report::Timings { jobs, total_seconds: total, per_trial_seconds: total / trials.max(1) as f64 },
    };
    Ok((report, verdict))
}
