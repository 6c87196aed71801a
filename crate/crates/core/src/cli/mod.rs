//! Command-line front end.
//!
//! Exit statuses: 0 success, 2 usage error, 3 config or parse error,
//! 4 equilibrium unavailable, 5 I/O error, 6 trace divergence, 1 anything
//! else.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::equilibrium::{regrets, user_override, EquilibriumError, EquilibriumKind};
use crate::game::JointProfile;
use crate::harness::{
    check_synchronization, detect_convergence, run_batch_with_jobs, run_trial,
    validate_self_described, validate_trace, write_summary_csv, BatchStats, HarnessError,
    RunConfig, RunSummary, RunTrace, TraceError, TrialOutcome,
};
use crate::{compute_equilibrium, Equilibrium, Game};

pub mod document;

pub use document::{load_game, parse_game, ConfigDocument, DocumentError, OutputPaths};

/// Environment variable that overrides every config's master seed.
pub const SEED_ENV: &str = "AWESOME_SEED";

pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const CONFIG: u8 = 3;
    pub const EQUILIBRIUM_UNAVAILABLE: u8 = 4;
    pub const IO: u8 = 5;
    pub const DIVERGENCE: u8 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Unavailable(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Unavailable(_) => exit::EQUILIBRIUM_UNAVAILABLE,
            CliError::Io(_) => exit::IO,
            CliError::Divergence(_) => exit::DIVERGENCE,
            CliError::Other(_) => exit::FAILURE,
        }
    }
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        match e {
            DocumentError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EquilibriumError> for CliError {
    fn from(e: EquilibriumError) -> Self {
        match e {
            EquilibriumError::Unavailable { .. } => CliError::Unavailable(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Equilibrium(e) => e.into(),
            HarnessError::Io(_) | HarnessError::Csv(_) => CliError::Io(e.to_string()),
            HarnessError::Trace(e) => e.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "awesome",
    version,
    about = "Repeated-game experiments with the AWESOME learner"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the equilibrium an AWESOME agent would precompute.
    Solve {
        /// Game file (TOML).
        game: PathBuf,
        /// Override to verify instead of solving: `p,p;p,p` per player.
        #[arg(long)]
        equilibrium: Option<String>,
        /// List every equilibrium found, not only the selected one.
        #[arg(long)]
        all: bool,
    },
    /// Print the epoch schedule and its validity verdict.
    Schedule(ScheduleArgs),
    /// Run one trial of an experiment.
    Run {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run every trial of an experiment.
    Batch {
        config: PathBuf,
        /// Worker threads; defaults to the config's `jobs`, then to all cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Replay-validate trace files.
    Validate {
        traces: Vec<PathBuf>,
        /// Check against this experiment's game, schedule and equilibrium
        /// instead of the configuration embedded in each trace.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Divergences to print per trace.
        #[arg(long, default_value_t = 10)]
        show: usize,
    },
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Master seed; overrides the config.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    /// Directory for per-trial trace files; overrides the config.
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
    /// Summary CSV path; overrides the config.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Create missing output directories instead of failing.
    #[arg(long)]
    pub mkdir: bool,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Take schedule parameters from an experiment config.
    #[arg(long, conflicts_with_all = ["epsilon_base", "decay", "ratio", "actions_total", "initial_rounds", "fixed_rounds"])]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epsilon_base: Option<f64>,
    #[arg(long, value_parser = ["harmonic", "geometric", "constant"])]
    pub decay: Option<String>,
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Total action count across players.
    #[arg(long, default_value_t = 4)]
    pub actions_total: usize,
    #[arg(long)]
    pub initial_rounds: Option<u64>,
    /// Force every epoch to this many rounds.
    #[arg(long)]
    pub fixed_rounds: Option<u64>,
    /// Number of epochs to print (rows t = 0..T).
    #[arg(long = "epochs", short = 'T', default_value_t = 10)]
    pub epochs: usize,
}

/// Parses arguments from the process and runs; the return value is the
/// process exit status.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute<W: Write>(cli: &Cli, out: &mut W) -> Result<(), CliError> {
    let mut text = String::new();
    let result = match &cli.command {
        Command::Solve {
            game,
            equilibrium,
            all,
        } => cmd_solve(game, equilibrium.as_deref(), *all, &mut text),
        Command::Schedule(args) => cmd_schedule(args, &mut text),
        Command::Run { config, trial, out } => cmd_run(config, *trial, out, &mut text),
        Command::Batch { config, jobs, out } => cmd_batch(config, *jobs, out, &mut text),
        Command::Validate {
            traces,
            config,
            show,
        } => cmd_validate(traces, config.as_deref(), *show, &mut text),
    };
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    result
}

fn parse_strategies(spec: &str) -> Result<Vec<Vec<f64>>, CliError> {
    spec.split(';')
        .map(|player| {
            player
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::Config(format!("--equilibrium: {x:?}: {e}")))
                })
                .collect()
        })
        .collect()
}

pub fn format_profile(game: &Game, eq: &Equilibrium) -> String {
    match eq.kind {
        EquilibriumKind::Pure => {
            let names: Vec<&str> = eq
                .strategies
                .iter()
                .enumerate()
                .map(|(p, s)| game.action_name(p, s.pure_action().expect("pure profile")))
                .collect();
            format!("({})", names.join(", "))
        }
        EquilibriumKind::Mixed => {
            let parts: Vec<String> = eq
                .strategies
                .iter()
                .map(|s| {
                    let probs: Vec<String> = s.probs().iter().map(f64::to_string).collect();
                    format!("({})", probs.join(", "))
                })
                .collect();
            format!("({})", parts.join(", "))
        }
    }
}

fn write_equilibrium(game: &Game, eq: &Equilibrium, out: &mut String) {
    let kind = match eq.kind {
        EquilibriumKind::Pure => "pure",
        EquilibriumKind::Mixed => "mixed",
    };
    let provenance = serde_json::to_value(eq.provenance).expect("serializable");
    let _ = writeln!(
        out,
        "{} [{kind}, {}]",
        format_profile(game, eq),
        provenance.as_str().unwrap_or("")
    );
    let r = regrets(game, &eq.strategies).expect("shapes verified");
    for (p, r) in r.iter().enumerate() {
        let _ = writeln!(out, "  regret player {p}: {r:e}");
    }
}

pub fn cmd_solve(
    path: &Path,
    override_spec: Option<&str>,
    all: bool,
    out: &mut String,
) -> Result<(), CliError> {
    let game = load_game(path)?;
    let ov = override_spec
        .map(|s| parse_strategies(s).and_then(|v| Ok(user_override(&game, v)?)))
        .transpose()?;
    if all && ov.is_none() {
        let found: Vec<Equilibrium> = if game.num_players() == 2 {
            crate::equilibrium::support_enumeration_2p(&game)?
        } else {
            crate::equilibrium::enumerate_pure_nash(&game)
                .iter()
                .map(|p: &JointProfile| {
                    Equilibrium::from_pure(
                        &game,
                        p,
                        crate::equilibrium::Provenance::PureEnumeration,
                    )
                })
                .collect()
        };
        if found.is_empty() {
            return Err(compute_equilibrium(&game, None)
                .expect_err("none found")
                .into());
        }
        for eq in &found {
            write_equilibrium(&game, eq, out);
        }
        return Ok(());
    }
    let eq = compute_equilibrium(&game, ov)?;
    write_equilibrium(&game, &eq, out);
    Ok(())
}

pub fn cmd_schedule(args: &ScheduleArgs, out: &mut String) -> Result<(), CliError> {
    let schedule = match &args.config {
        Some(path) => ConfigDocument::load(path)?.run.schedule,
        None => {
            let raw = document::RawSchedule {
                epsilon_base: args.epsilon_base,
                decay: args.decay.clone(),
                ratio: args.ratio,
                actions_total: Some(args.actions_total),
                initial_rounds: args.initial_rounds,
                fixed_rounds: args.fixed_rounds,
                cap: None,
            };
            raw.build(args.actions_total)
                .map_err(|(field, msg)| CliError::Config(format!("{field}: {msg}")))?
        }
    };
    let _ = writeln!(
        out,
        "{:>6} {:>22} {:>22} {:>12} {:>20} {:>20}",
        "t", "eps_e", "eps_s", "N", "stat_product", "eq_product"
    );
    let (mut stat, mut eq) = (1.0f64, 1.0f64);
    for t in 0..args.epochs {
        if t >= 1 {
            stat *= schedule.stationarity_factor(t);
            eq *= schedule.equilibrium_factor(t);
        }
        let _ = writeln!(
            out,
            "{t:>6} {:>22} {:>22} {:>12} {stat:>20} {eq:>20}",
            schedule.eps_e(t),
            schedule.eps_s(t),
            schedule.rounds(t)
        );
    }
    // Validity is judged on the printed rows, which need t = 0, 1, 2 at least.
    match args
        .epochs
        .checked_sub(1)
        .map(|h| schedule.check_valid_prefix(h))
    {
        None | Some(Err(_)) => {
            let _ = writeln!(out, "verdict deferred: needs at least 3 epochs");
        }
        Some(Ok(report)) => match report.first_failure() {
            None => {
                let scope = if report.analytic {
                    "valid (holds for every t by construction)".to_string()
                } else {
                    format!("valid on t = 0..={}", report.horizon)
                };
                let _ = writeln!(out, "verdict: {scope}");
            }
            Some((condition, t)) => {
                let _ = writeln!(out, "verdict: invalid: {condition} fails at t = {t}");
            }
        },
    }
    Ok(())
}

fn load_for_run(path: &Path, args: &OutputArgs) -> Result<(ConfigDocument, OutputPaths), CliError> {
    let mut doc = ConfigDocument::load(path)?;
    if let Some(seed) = args.seed {
        doc.run.master_seed = seed;
    }
    let mut output = doc.output.clone();
    if let Some(d) = &args.trace_dir {
        output.trace_dir = Some(d.clone());
    }
    if let Some(s) = &args.summary {
        output.summary = Some(s.clone());
    }
    output.create_dirs |= args.mkdir;
    let summary_dir = output.summary.as_deref().and_then(Path::parent);
    for dir in output.trace_dir.as_deref().into_iter().chain(summary_dir) {
        if dir.as_os_str().is_empty() || dir.is_dir() {
            continue;
        }
        if output.create_dirs {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        } else {
            return Err(CliError::Io(format!(
                "{}: output directory does not exist (pass --mkdir or set output.create_dirs = true)",
                dir.display()
            )));
        }
    }
    Ok((doc, output))
}

pub fn trace_file_name(trial: u64) -> String {
    format!("trial-{trial:04}.jsonl")
}

fn write_trace(dir: &Path, trace: &RunTrace) -> Result<PathBuf, CliError> {
    let path = dir.join(trace_file_name(trace.header.trial));
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut w = BufWriter::new(file);
    trace.write_to(&mut w).map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn write_summary(
    path: &Path,
    config: &RunConfig,
    outcomes: &[TrialOutcome],
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    write_summary_csv(&mut w, config, outcomes).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

fn summary_line(trial: u64, summary: &Result<RunSummary, String>) -> String {
    match summary {
        Ok(s) => {
            let phi: Vec<String> = s
                .final_phi
                .iter()
                .map(|(p, phi)| {
                    let probs: Vec<String> = phi.iter().map(f64::to_string).collect();
                    format!("p{p}=({})", probs.join(","))
                })
                .collect();
            format!(
                "trial {trial}: converged={} kind={} restarts={} rounds={} epochs={} phi {}",
                s.converged,
                s.kind,
                s.restarts,
                s.rounds_used,
                s.epochs,
                phi.join(" ")
            )
        }
        Err(e) => format!("trial {trial}: error: {e}"),
    }
}

pub fn cmd_run(
    path: &Path,
    trial: u64,
    args: &OutputArgs,
    out: &mut String,
) -> Result<(), CliError> {
    let (doc, output) = load_for_run(path, args)?;
    if trial >= doc.run.trial_count {
        return Err(CliError::Config(format!(
            "trial {trial} outside 0..{} (config `trials`)",
            doc.run.trial_count
        )));
    }
    let trace = run_trial(&doc.run, trial)?;
    let summary = detect_convergence(&trace, doc.run.window).map_err(|e| e.to_string());
    if let Some(dir) = &output.trace_dir {
        write_trace(dir, &trace)?;
    }
    let outcome = TrialOutcome {
        trial,
        summary: summary.clone(),
        trace: None,
    };
    if let Some(s) = &output.summary {
        write_summary(s, &doc.run, std::slice::from_ref(&outcome))?;
    }
    let _ = writeln!(out, "{}", summary_line(trial, &summary));
    Ok(())
}

fn write_stats(stats: &BatchStats, out: &mut String) {
    let _ = writeln!(
        out,
        "trials={} errors={} converged={} fraction={}",
        stats.trials,
        stats.errors,
        stats.converged,
        stats.convergence_fraction()
    );
    let mean = stats
        .mean_epochs_to_convergence()
        .map_or("n/a".to_string(), |m| m.to_string());
    let _ = writeln!(out, "mean epochs to convergence: {mean}");
    let restarts: Vec<String> = stats
        .restart_histogram
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect();
    let _ = writeln!(out, "restarts: {}", restarts.join(" "));
    let kinds: Vec<String> = stats
        .kinds
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect();
    let _ = writeln!(out, "kinds: {}", kinds.join(" "));
}

pub fn cmd_batch(
    path: &Path,
    jobs: Option<usize>,
    args: &OutputArgs,
    out: &mut String,
) -> Result<(), CliError> {
    let (doc, output) = load_for_run(path, args)?;
    let jobs = jobs
        .or(doc.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let batch = run_batch_with_jobs(&doc.run, jobs)?;
    if let Some(dir) = &output.trace_dir {
        for trace in batch.traces() {
            write_trace(dir, trace)?;
        }
    }
    if let Some(s) = &output.summary {
        write_summary(s, &doc.run, &batch.outcomes)?;
    }
    for o in &batch.outcomes {
        let _ = writeln!(out, "{}", summary_line(o.trial, &o.summary));
    }
    write_stats(&batch.stats, out);
    Ok(())
}

pub fn cmd_validate(
    paths: &[PathBuf],
    config: Option<&Path>,
    show: usize,
    out: &mut String,
) -> Result<(), CliError> {
    if paths.is_empty() {
        return Err(CliError::Config("no trace files given".into()));
    }
    let external = config
        .map(|c| -> Result<_, CliError> {
            let doc = ConfigDocument::load(c)?;
            let eq = if doc.run.roster.iter().any(|s| s.is_awesome()) {
                Some(doc.run.resolve_equilibrium()?)
            } else {
                None
            };
            Ok((doc, eq))
        })
        .transpose()?;
    let mut failed = 0usize;
    for path in paths {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let trace = RunTrace::read_from(BufReader::new(file))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let report = match &external {
            Some((doc, eq)) => {
                validate_trace(&doc.run.game, &doc.run.schedule, eq.as_ref(), &trace)
            }
            None => validate_self_described(&trace),
        }
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let sync = check_synchronization(&trace);
        if report.is_clean() && sync.is_empty() {
            let _ = writeln!(
                out,
                "{}: ok ({} epochs)",
                path.display(),
                report.epochs_checked
            );
            continue;
        }
        failed += 1;
        let _ = writeln!(
            out,
            "{}: {} divergences, {} unsynchronized epochs",
            path.display(),
            report.divergences.len(),
            sync.len()
        );
        for d in report.divergences.iter().take(show) {
            let _ = writeln!(out, "  {d}");
        }
        for s in sync.iter().take(show) {
            let _ = writeln!(
                out,
                "  epoch {}: flag tuples differ: {:?}",
                s.epoch, s.tuples
            );
        }
    }
    if failed > 0 {
        return Err(CliError::Divergence(format!(
            "{failed} of {} traces diverged",
            paths.len()
        )));
    }
    Ok(())
}
