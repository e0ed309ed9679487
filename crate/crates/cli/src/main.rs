mod commands;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::{Format, Outcome};

#[derive(Parser, Debug)]
#[command(name = "percmono", version, about = "Pattern-chain analysis of percolation on cylinders")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Cap on worker threads for enumeration and sampling.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,

    /// Emit CSV.
    #[arg(long, global = true)]
    csv: bool,

    /// Write the result to this file and a manifest to `<out>.manifest.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// List the patterns of a graph.
    Patterns(PatternsArgs),
    /// Dump the integer transition counts.
    Kernel(KernelArgs),
    /// Quasi-stationary distribution and convergence certificate.
    Qsd(QsdArgs),
    /// Smallest step from which marginals stop increasing.
    Onset(OnsetArgs),
    /// Closed-form onset bounds, or the uniform split check.
    Bounds(BoundsArgs),
    /// Grid checks of the auxiliary inequalities.
    VerifyAppendix(AppendixArgs),
    /// Self-avoiding walk census.
    Saw(SawArgs),
    /// Upper bound on the expected half-plane axis cluster.
    Theorem3(Theorem3Args),
    /// Monte Carlo estimate of one functional.
    Mc(McArgs),
    /// Run every verification and report pass/fail.
    VerifyAll(VerifyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Patterns(_) => "patterns",
            Command::Kernel(_) => "kernel",
            Command::Qsd(_) => "qsd",
            Command::Onset(_) => "onset",
            Command::Bounds(_) => "bounds",
            Command::VerifyAppendix(_) => "verify-appendix",
            Command::Saw(_) => "saw",
            Command::Theorem3(_) => "theorem3",
            Command::Mc(_) => "mc",
            Command::VerifyAll(_) => "verify-all",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GraphKind {
    Cycle,
    Line,
}

#[derive(Args, Debug, Serialize)]
struct GraphArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "cycle")]
    graph: GraphKind,
    /// Largest k the pattern enumeration accepts.
    #[arg(long, default_value_t = percmono::pattern::DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args, Debug, Serialize)]
struct PatternsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    graph: GraphArgs,
    /// Only the infected patterns reachable from the initial layer.
    #[arg(long)]
    attainable: bool,
    #[arg(long, default_value_t = 0)]
    origin: usize,
}

#[derive(Args, Debug, Serialize)]
struct KernelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    graph: GraphArgs,
}

#[derive(Args, Debug, Serialize)]
struct QsdArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p: f64,
    /// Steps of the minorization for `ν = δ_{x_*}`.
    #[arg(long, default_value_t = 3)]
    n_nu: usize,
    /// Horizon of the finite survival comparison.
    #[arg(long, default_value_t = 200)]
    horizon: usize,
}

#[derive(Args, Debug, Serialize)]
struct OnsetArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = percmono::monotonicity::DEFAULT_ONSET_SEARCH)]
    n_max: usize,
}

#[derive(Args, Debug, Serialize)]
struct BoundsArgs {
    /// Comma-separated cycle lengths.
    #[arg(long, value_delimiter = ',', default_value = "3")]
    k: Vec<usize>,
    /// Comma-separated values of p.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    p: Vec<f64>,
    /// Check the seven-interval split for k in 3..=k-max instead.
    #[arg(long)]
    split: bool,
    #[arg(long, default_value_t = 200)]
    k_max: usize,
    #[arg(long, default_value_t = percmono::bounds::DEFAULT_SPLIT_POINTS)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
struct AppendixArgs {
    #[arg(long, default_value_t = percmono::bounds::DEFAULT_APPENDIX_DENSITY)]
    density: usize,
}

#[derive(Args, Debug, Serialize)]
struct SawArgs {
    /// Same cap for every table.
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    max_a: Option<usize>,
    #[arg(long)]
    max_b: Option<usize>,
    #[arg(long)]
    max_c: Option<usize>,
    #[arg(long)]
    max_d: Option<usize>,
    /// Full-depth tables (several minutes).
    #[arg(long)]
    deep: bool,
    /// Stop after this many search nodes per region; counts become lower bounds.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Also check the splitting inequalities between the tables.
    #[arg(long)]
    recursions: bool,
}

#[derive(Args, Debug, Serialize)]
struct Theorem3Args {
    #[arg(long, default_value_t = 0.35)]
    p: f64,
    /// Recount the walk tables instead of using the stored ones.
    #[arg(long)]
    recompute: bool,
    /// Compare against a Monte Carlo estimate with this many samples.
    #[arg(long)]
    mc_samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FunctionalKind {
    Marginal,
    Connection,
    ConnectionFull,
    Infected,
    InfectedFull,
    HalfPlaneAxis,
    Escape,
}

#[derive(Args, Debug, Serialize)]
struct McArgs {
    /// Cycle length, or strip width for the strip functionals.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: f64,
    #[arg(long, value_enum)]
    functional: FunctionalKind,
    /// Layer of the functional.
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Target vertex for connection functionals.
    #[arg(long, default_value_t = 0)]
    v: usize,
    /// Target pattern for the marginal functional.
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = percmono::montecarlo::DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    origin: usize,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    /// Shorter grids, census to length 16 (default).
    #[arg(long, conflicts_with = "deep")]
    quick: bool,
    /// Full census and the k ≤ 200 bound sweep.
    #[arg(long)]
    deep: bool,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
}

/// Input the user got wrong; exits with code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn is_usage_error(err: &anyhow::Error) -> bool {
    use percmono::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return true;
    }
    matches!(
        err.downcast_ref::<E>(),
        Some(
            E::InvalidPartition(_)
                | E::Parse { .. }
                | E::Capacity { .. }
                | E::NotACycle
                | E::ProbabilityOutOfRange(..)
                | E::UnknownState(_)
                | E::Divergent(_)
        )
    )
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let format = match (cli.json, cli.csv) {
        (true, _) => Format::Json,
        (_, true) => Format::Csv,
        _ => Format::Text,
    };
    let outcome = match &cli.command {
        Command::Patterns(a) => commands::patterns(a, format)?,
        Command::Kernel(a) => commands::kernel(a, format)?,
        Command::Qsd(a) => commands::qsd(a, format)?,
        Command::Onset(a) => commands::onset(a, format)?,
        Command::Bounds(a) => commands::bounds(a, format)?,
        Command::VerifyAppendix(a) => commands::appendix(a, format)?,
        Command::Saw(a) => commands::saw(a, format)?,
        Command::Theorem3(a) => commands::theorem3(a, format)?,
        Command::Mc(a) => commands::mc(a, format)?,
        Command::VerifyAll(a) => verify::run(a, format)?,
    };
    output::emit(cli.command.name(), &cli.command, cli.out.as_deref(), &outcome)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage_error(&err) { 2 } else { 1 })
        }
    }
}
