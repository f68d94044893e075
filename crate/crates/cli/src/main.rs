//! Command-line driver: configuration ingestion, subcommand dispatch,
//! logging, and output management for the `layerwave` library.
//!
//! Exit codes: `0` success, `1` validation error (bad configuration or
//! arguments that survive parsing but fail domain checks), `2` numerical
//! failure (singular solves, unusable data, failed verification), `64`
//! unknown flags or subcommands.

mod commands;
mod manifest;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use layerwave::{Error, RunConfig};

use crate::commands::{CmdOutcome, Ctx};
use crate::manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(
    name = "layerwave",
    version,
    about = "Two-layer scattering in the Laplace domain: exact transparent boundaries, \
             absorbing-layer truncation, certified error factors, and convergence sweeps.",
    max_term_width = 100
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Configuration file (JSON).  Takes precedence over --preset.
    #[arg(long, global = true, env = "LAYERWAVE_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,

    /// Built-in configuration preset (`quick` or `repro`).
    #[arg(
        long,
        global = true,
        env = "LAYERWAVE_PRESET",
        value_name = "NAME",
        default_value = "quick"
    )]
    preset: String,

    /// Override the configuration's RNG seed.
    #[arg(long, global = true, env = "LAYERWAVE_SEED", value_name = "N")]
    seed: Option<u64>,

    /// Directory for file artifacts and the run manifest.
    #[arg(
        long,
        global = true,
        env = "LAYERWAVE_OUT",
        value_name = "DIR",
        default_value = "layerwave-out"
    )]
    out: PathBuf,

    /// Worker threads (default: one per logical CPU).
    #[arg(long, global = true, env = "LAYERWAVE_THREADS", value_name = "N")]
    threads: Option<usize>,

    /// Logging verbosity on stderr; stdout carries only data.
    #[arg(
        long,
        global = true,
        env = "LAYERWAVE_LOG",
        value_enum,
        default_value_t = LogLevel::Normal
    )]
    log: LogLevel,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum LogLevel {
    Quiet,
    Normal,
    Debug,
}

/// Stderr logger; stdout is reserved for machine-readable data.
#[derive(Copy, Clone, Debug)]
pub struct Log {
    level: LogLevel,
}

impl Log {
    pub fn info(&self, msg: impl AsRef<str>) {
        if self.level >= LogLevel::Normal {
            eprintln!("{}", msg.as_ref());
        }
    }

    pub fn debug(&self, msg: impl AsRef<str>) {
        if self.level >= LogLevel::Debug {
            eprintln!("debug: {}", msg.as_ref());
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print certified bound rows (regime, envelope constants, certified
    /// factor, measured operator norm) as CSV on stdout.
    Bound(commands::BoundArgs),

    /// Compare the measured boundary-symbol error against its certified
    /// factor, per layer and per mode.
    SymbolError(commands::SymbolErrorArgs),

    /// Solve one tangential mode of the strip problem and export the depth
    /// profile as CSV.
    SolveMode(commands::SolveModeArgs),

    /// Solve a lattice of tangential modes and export the per-mode depth
    /// profiles plus the lattice manifest.
    SolveStrip(commands::SolveStripArgs),

    /// Drive one mode with a time source along the inversion line and export
    /// probe time series plus grid/truncation diagnostics.
    TimeSolve(commands::TimeSolveArgs),

    /// Run the configured convergence sweep: measured error next to the
    /// certified factor at every point, decay-rate fit, CSV/JSON/plot-script
    /// outputs.
    Sweep,

    /// Run the invariant suites hermetically and print a pass table.
    Verify(verify::VerifyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bound(_) => "bound",
            Command::SymbolError(_) => "symbol-error",
            Command::SolveMode(_) => "solve-mode",
            Command::SolveStrip(_) => "solve-strip",
            Command::TimeSolve(_) => "time-solve",
            Command::Sweep => "sweep",
            Command::Verify(_) => "verify",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{err}");
                    ExitCode::from(64)
                }
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // The run completed and wrote its artifacts, but a numerical check
        // failed (e.g. a verification suite).
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter { .. }
        | Error::OutOfDomain { .. }
        | Error::UnknownProfile(_)
        | Error::InadmissibleSource(_)
        | Error::Grid(_)
        | Error::CurvedInterface
        | Error::Config(_)
        | Error::Io(_) => 1,
        Error::Singular(_) | Error::NotEnoughData(_) => 2,
    }
}

fn load_config(global: &GlobalArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::preset(&global.preset)?,
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Returns `Ok(true)` on full success and `Ok(false)` when the run completed
/// but a numerical check failed.
fn run(cli: Cli) -> Result<bool, Error> {
    if let Some(n) = cli.global.threads {
        // A second initialization (tests driving the binary repeatedly in
        // one process would hit it) is not an error worth failing the run.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }

    let started = manifest::utc_now();
    let cfg = load_config(&cli.global)?;
    let log = Log {
        level: cli.global.log,
    };
    let ctx = Ctx {
        cfg: &cfg,
        out: &cli.global.out,
        log,
    };

    let outcome: CmdOutcome = match &cli.command {
        Command::Bound(args) => commands::bound(&ctx, args)?,
        Command::SymbolError(args) => commands::symbol_error(&ctx, args)?,
        Command::SolveMode(args) => commands::solve_mode_cmd(&ctx, args)?,
        Command::SolveStrip(args) => commands::solve_strip(&ctx, args)?,
        Command::TimeSolve(args) => commands::time_solve(&ctx, args)?,
        Command::Sweep => commands::sweep(&ctx)?,
        Command::Verify(args) => verify::verify(&ctx, args)?,
    };

    // Every completed run records exactly one manifest; runs that abort on a
    // validation or numerical error leave no artifacts behind.
    let manifest = RunManifest {
        schema_version: cfg.schema_version,
        config_hash: cfg.config_hash_hex(),
        seed: cfg.seed,
        subcommand: cli.command.name().to_string(),
        started_utc: started,
        finished_utc: manifest::utc_now(),
        outputs: outcome
            .files
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
    };
    let manifest_path = manifest.write(&cli.global.out)?;
    log.info(format!("manifest: {}", manifest_path.display()));

    Ok(outcome.ok)
}
