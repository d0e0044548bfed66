mod record;

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use pkind::encoder::{encode, TransitionSystem};
use pkind::engine::{check_property, orchestrate, EngineOptions, Mode, RunOutcome, UnknownReason, Verdict, DEFAULT_CHECK_TIMEOUT};
use pkind::frontend::elaborate;
use pkind::invgen::Template;
use pkind::smt::SolverConfig;
use record::{parse_tsv, summarize, BenchRecord, HEADER};

/// Like `println!`, but a closed stdout is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! say_raw {
    ($($arg:tt)*) => {{
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

const EXIT_VALID: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_FRONTEND: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_INVALID: u8 = 10;
const EXIT_UNKNOWN: u8 = 20;

/// Proves or refutes invariant properties of dataflow programs by parallel
/// k-induction.
#[derive(Parser, Debug)]
#[command(name = "pk-check", version, args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Program files (`.lus`).
    #[arg(required = true)]
    files: Vec<PathBuf>,

    #[command(flatten)]
    run: RunArgs,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,

    /// Append one TSV record per run to this file.
    #[arg(long, value_name = "PATH")]
    stats: Option<PathBuf>,

    /// Print the transition system before checking.
    #[arg(long)]
    dump_ts: bool,

    /// Log every invariant message to this file.
    #[arg(long, value_name = "FILE")]
    dump_invariants: Option<PathBuf>,

    /// Main node (overrides `--%MAIN`).
    #[arg(long = "main", value_name = "NODE")]
    main_node: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every `.lus` file of a directory under every requested mode.
    Bench {
        dir: PathBuf,
        /// Comma-separated modes.
        #[arg(long, value_delimiter = ',', default_value = "k-induct,no-inc-inv,inc-inv")]
        modes: Vec<Mode>,
        /// TSV file to append to.
        #[arg(long, short, default_value = "bench.tsv")]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Summarize a TSV produced by `bench` or `--stats`.
    Summary { tsv: PathBuf },
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long, default_value = "inc-inv")]
    mode: Mode,
    /// Global timeout in seconds.
    #[arg(long, default_value_t = 100.0)]
    timeout: f64,
    /// Per solver check timeout in seconds.
    #[arg(long, default_value_t = DEFAULT_CHECK_TIMEOUT.as_secs_f64())]
    check_timeout: f64,
    #[arg(long, default_value_t = 200)]
    max_k: u32,
    /// Solver command line, e.g. "z3 -in".
    #[arg(long, env = "PK_SOLVER", default_value = "z3 -in")]
    solver_cmd: String,
    #[arg(long)]
    path_compression: bool,
    /// Comma-separated templates: int-leq, bool-imp.
    #[arg(long, value_delimiter = ',', default_value = "int-leq,bool-imp")]
    inv_templates: Vec<Template>,
    /// Send only new invariants in incremental mode.
    #[arg(long, value_enum, default_value_t = Switch::On)]
    inv_delta: Switch,
    /// Also draw candidate terms from the property.
    #[arg(long)]
    property_terms: bool,
    /// Write every solver dialogue to this directory.
    #[arg(long, value_name = "DIR")]
    dump_smt: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Tsv,
}

impl RunArgs {
    fn options(&self) -> Result<EngineOptions, String> {
        if !self.timeout.is_finite() || self.timeout <= 0.0 {
            return Err("--timeout must be positive".into());
        }
        if !self.check_timeout.is_finite() || self.check_timeout <= 0.0 {
            return Err("--check-timeout must be positive".into());
        }
        let mut solver = SolverConfig::new(self.solver_cmd.clone());
        solver.check_timeout = Some(Duration::from_secs_f64(self.check_timeout));
        solver.dump_dir = self.dump_smt.clone();
        let mut opts = EngineOptions::new(self.mode, solver);
        opts.timeout = Duration::from_secs_f64(self.timeout);
        opts.max_k = self.max_k;
        opts.path_compression = self.path_compression;
        opts.templates = self.inv_templates.clone();
        opts.inv_delta = self.inv_delta == Switch::On;
        opts.caps.include_property = self.property_terms;
        Ok(opts)
    }
}

/// Result of checking one file.
struct FileRun {
    outcome: RunOutcome,
    sys: TransitionSystem,
}

fn load(path: &Path, main: Option<&str>) -> Result<TransitionSystem, (u8, String)> {
    let src = fs::read_to_string(path).map_err(|e| (EXIT_FRONTEND, format!("{}: {e}", path.display())))?;
    let program = elaborate(&src, main).map_err(|e| (EXIT_FRONTEND, format!("{}: {e}", path.display())))?;
    encode(&program).map_err(|e| (EXIT_FRONTEND, format!("{}: {e}", path.display())))
}

fn exit_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Valid { .. } => EXIT_VALID,
        Verdict::Invalid(_) => EXIT_INVALID,
        Verdict::Unknown(UnknownReason::SolverError(_)) => EXIT_SOLVER,
        Verdict::Unknown(_) => EXIT_UNKNOWN,
    }
}

fn record_of(file: &Path, mode: Mode, outcome: &RunOutcome) -> BenchRecord {
    let verdict = match &outcome.verdict {
        Verdict::Valid { .. } => "valid",
        Verdict::Invalid(_) => "invalid",
        Verdict::Unknown(UnknownReason::SolverError(_) | UnknownReason::Crash(_)) => "error",
        Verdict::Unknown(_) => "unknown",
    };
    BenchRecord {
        file: file.display().to_string(),
        mode: mode.to_string(),
        verdict: verdict.into(),
        k: outcome.verdict.k(),
        time_s: outcome.stats.elapsed.as_secs_f64(),
        inv_emitted: outcome.stats.inv_emitted,
        inv_used: outcome.stats.inv_used,
        checks_base: outcome.stats.checks_base,
        checks_step: outcome.stats.checks_step,
    }
}

fn append_records(path: &Path, records: &[BenchRecord]) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new().create(true).append(true).open(path).with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        writeln!(f, "{HEADER}")?;
    }
    for r in records {
        writeln!(f, "{}", r.to_tsv())?;
    }
    Ok(())
}

fn check_file(path: &Path, cli: &Cli, opts: &EngineOptions) -> Result<FileRun, (u8, String)> {
    let sys = load(path, cli.main_node.as_deref())?;
    if cli.dump_ts {
        say_raw!("{}", sys.dump_smt());
    }
    let outcome = orchestrate(&sys, opts);
    Ok(FileRun { outcome, sys })
}

fn report(path: &Path, run: &FileRun, cli: &Cli, opts: &EngineOptions) -> Result<()> {
    let FileRun { outcome, sys } = run;
    match cli.format {
        Format::Human => {
            say!("{}", outcome.verdict);
            // Per-property verdicts when the conjunction fails.
            if matches!(outcome.verdict, Verdict::Invalid(_)) && sys.properties.len() > 1 {
                for (name, prop) in &sys.properties {
                    let single = check_property(sys, prop, opts);
                    let line = single.verdict.to_string();
                    say!("property {name}: {}", line.lines().next().unwrap_or_default());
                }
            }
        }
        Format::Tsv => say!("{}", record_of(path, opts.mode, outcome).to_tsv()),
    }
    if let Verdict::Unknown(UnknownReason::SolverError(e) | UnknownReason::Crash(e)) = &outcome.verdict {
        eprintln!("pk-check: {}: {e}", path.display());
    }
    if let Some(log) = &cli.dump_invariants {
        let mut f = OpenOptions::new().create(true).append(true).open(log).with_context(|| format!("opening {}", log.display()))?;
        for m in &outcome.invariants {
            writeln!(f, "# {} proved_at_k={} count={}", path.display(), m.proved_at_k, m.ids.len())?;
            for (id, inv) in m.ids.iter().zip(&m.formulas) {
                writeln!(f, "{id}\t{}", inv.pretty())?;
            }
        }
    }
    if let Some(stats) = &cli.stats {
        append_records(stats, &[record_of(path, opts.mode, outcome)])?;
    }
    Ok(())
}

fn run_check(cli: &Cli) -> u8 {
    let opts = match cli.run.options() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("pk-check: {e}");
            return EXIT_USAGE;
        }
    };
    let mut code = EXIT_VALID;
    for path in &cli.files {
        let this = match check_file(path, cli, &opts) {
            Ok(run) => {
                if let Err(e) = report(path, &run, cli, &opts) {
                    eprintln!("pk-check: {e:#}");
                }
                exit_code(&run.outcome.verdict)
            }
            Err((c, msg)) => {
                eprintln!("pk-check: {msg}");
                c
            }
        };
        code = code.max(this);
    }
    code
}

fn run_bench(dir: &Path, modes: &[Mode], out: &Path, run: &RunArgs) -> Result<u8> {
    let opts = match run.options() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("pk-check: {e}");
            return Ok(EXIT_USAGE);
        }
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "lus"))
        .collect();
    files.sort();
    if files.is_empty() {
        warn!("no .lus files in {}", dir.display());
        eprintln!("pk-check: warning: no .lus files in {}", dir.display());
    }
    let mut records = Vec::new();
    for file in &files {
        let loaded = load(file, None);
        for &mode in modes {
            let record = match &loaded {
                Ok(sys) => {
                    let mut o = opts.clone();
                    o.mode = mode;
                    record_of(file, mode, &orchestrate(sys, &o))
                }
                Err((_, msg)) => {
                    eprintln!("pk-check: {msg}");
                    BenchRecord {
                        file: file.display().to_string(),
                        mode: mode.to_string(),
                        verdict: "unknown".into(),
                        k: None,
                        time_s: 0.0,
                        inv_emitted: 0,
                        inv_used: 0,
                        checks_base: 0,
                        checks_step: 0,
                    }
                }
            };
            say!("{}", record.to_tsv());
            append_records(out, std::slice::from_ref(&record))?;
            records.push(record);
        }
    }
    if records.is_empty() {
        append_records(out, &[])?;
    }
    say_raw!("{}", summarize(&records));
    Ok(EXIT_VALID)
}

fn run_summary(tsv: &Path) -> Result<u8> {
    let text = fs::read_to_string(tsv).with_context(|| format!("reading {}", tsv.display()))?;
    let records = parse_tsv(&text)?;
    say_raw!("{}", summarize(&records));
    Ok(EXIT_VALID)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_VALID });
        }
    };
    let code = match &cli.command {
        None => run_check(&cli),
        Some(Command::Bench { dir, modes, out, run }) => run_bench(dir, modes, out, run).unwrap_or_else(|e| {
            eprintln!("pk-check: {e:#}");
            EXIT_USAGE
        }),
        Some(Command::Summary { tsv }) => run_summary(tsv).unwrap_or_else(|e| {
            eprintln!("pk-check: {e:#}");
            EXIT_USAGE
        }),
    };
    ExitCode::from(code)
}
