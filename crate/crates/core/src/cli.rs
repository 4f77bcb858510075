//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};

use crate::acceptance;
use crate::bench::{run_suite, SuiteSpec};
use crate::error::{Error, Result};
use crate::io::{load_model, record_file_name, write_run_record, RunRecord};
use crate::oracle::{brute_force_map_with, DEFAULT_ORACLE_CAP};
use crate::par::Execution;
use crate::solvers::{solve_multi_init, SolverConfig, SolverKind};

#[derive(Debug, Parser)]
#[command(
    name = "mrf-relax",
    version,
    about = "MAP inference for discrete Markov random fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a model and write a run record.
    Solve(SolveArgs),
    /// Exhaustive minimum of a small model.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        /// Largest number of labelings to enumerate.
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        cap: u128,
    },
    /// Run a benchmark suite or the acceptance checks.
    Bench(BenchArgs),
    /// Parse and validate a model.
    Check {
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Model file (UAI `MARKOV` or `MRF-E v1`).
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_parser = PossibleValuesParser::new(SolverKind::ALL.map(SolverKind::name)).map(|s| s.parse::<SolverKind>().expect("listed value")))]
    solver: SolverKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of starts: the unary solution, then random points.
    #[arg(long, default_value_t = 1)]
    inits: usize,
    #[arg(long)]
    max_iters: Option<usize>,
    /// JSON solver configuration; flags above take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record path; defaults to `<model>__<solver>__s<seed>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
struct BenchArgs {
    #[command(subcommand)]
    action: Option<BenchAction>,
    /// JSON suite specification.
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Output folder for records and summaries.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum BenchAction {
    /// Run the acceptance checks, one line per criterion.
    RunAcceptance {
        /// Restrict to these criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

const USAGE_ERROR: i32 = 1;
const RUN_ERROR: i32 = 2;

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`cli_main`] with explicit output streams.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                USAGE_ERROR
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let exec = Execution::from_env();
    let result = match cli.command {
        Command::Solve(args) => solve(args, exec, out),
        Command::Oracle { model, cap } => oracle(&model, cap, exec, out),
        Command::Check { model } => check(&model, out),
        Command::Bench(args) => return bench(args, exec, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            RUN_ERROR
        }
    }
}

fn model_id(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned())
}

fn solve(args: SolveArgs, exec: Execution, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&args.model)?;
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text)?
        }
        None => SolverConfig::default(),
    };
    cfg.seed = args.seed;
    cfg.execution = exec;
    if let Some(n) = args.max_iters {
        cfg.max_iters = n;
    }
    let report = solve_multi_init(args.solver, &model, &cfg, args.inits)?;
    let id = model_id(&args.model);
    let path = args
        .out
        .unwrap_or_else(|| PathBuf::from(record_file_name(&id, args.solver, args.seed)));
    let energy = report.discrete_energy;
    write_run_record(&RunRecord::new(&id, &model, args.inits.max(1), &cfg, report), &path)?;
    let _ = writeln!(out, "energy {energy}");
    Ok(())
}

fn oracle(path: &Path, cap: u128, exec: Execution, out: &mut dyn Write) -> Result<()> {
    let model = load_model(path)?;
    let (labeling, energy) = brute_force_map_with(&model, cap, exec)?;
    let labels: Vec<String> = labeling.labels().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "energy {energy}");
    let _ = writeln!(out, "labeling {}", labels.join(" "));
    Ok(())
}

fn check(path: &Path, out: &mut dyn Write) -> Result<()> {
    let model = load_model(path)?;
    let _ = writeln!(
        out,
        "ok: {} nodes, {} cliques, degree {}",
        model.num_nodes(),
        model.cliques().len(),
        model.degree()
    );
    Ok(())
}

fn bench(args: BenchArgs, exec: Execution, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Some(BenchAction::RunAcceptance { only }) = args.action {
        let mut all = true;
        for id in acceptance::IDS
            .into_iter()
            .filter(|id| only.is_empty() || only.contains(id))
        {
            let outcome = acceptance::run_criterion(id, exec);
            all &= outcome.passed;
            let _ = writeln!(out, "{outcome}");
            let _ = out.flush();
        }
        return if all { 0 } else { RUN_ERROR };
    }
    let (Some(suite), Some(dir)) = (args.suite, args.out) else {
        let _ = writeln!(
            err,
            "error: `bench` needs --suite and --out, or the `run-acceptance` subcommand"
        );
        return USAGE_ERROR;
    };
    let result = SuiteSpec::load(&suite).and_then(|mut spec| {
        spec.config.execution = exec;
        run_suite(&spec, &dir)
    });
    match result {
        Ok(summary) => {
            let _ = write!(out, "{}", summary.to_text());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            RUN_ERROR
        }
    }
}
