mod commands;
mod config;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polaron_core::verify::Suite;
use polaron_core::Error;
use serde_json::json;

use commands::{CylCheck, Emitter};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "polaron", version, about = "Anisotropic polaron ground states and their linearized spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the energy and save the field.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Lowest eigenvalues of the linearized operator per parity sector.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Canonical entry varied by `--sweep`.
        #[arg(long, default_value_t = 0, requires = "sweep")]
        sweep_axis: usize,
        /// `from:to:count` values for the swept entry.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Cylindrical reduction: per-n spectra or individual checks.
    Cyl {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u32>>,
        #[arg(long, value_enum)]
        check: Vec<CylCheck>,
        /// Write the v_n table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Radial reference solution of the isotropic problem.
    Oracle {
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Directory for the radial profile CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run acceptance checks.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Reflection symmetry and rearrangement equalities of the minimizer.
    SymmetryCheck {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Outcome {
    Done,
    Failed,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NoBinding { .. } | Error::NotConverged { .. } => 2,
        _ => 1,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::NoBinding { .. } => "no-binding",
        Error::NotConverged { .. } => "not-converged",
        Error::Io(_) => "io",
        Error::Invalid(_) => "invalid",
        _ => "internal",
    }
}

fn parse_sweep(text: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Invalid(format!("sweep {text:?} must be from:to:count"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let from: f64 = parts[0].parse().map_err(|_| bad())?;
    let to: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if count < 2 {
        return Err(bad());
    }
    Ok((0..count).map(|k| from + (to - from) * k as f64 / (count - 1) as f64).collect())
}

fn load(path: &Option<PathBuf>) -> Result<Option<RunConfig>, Error> {
    path.as_ref().map(|p| RunConfig::load(p)).transpose()
}

fn run(cli: Cli, hash: &mut String) -> Result<Outcome, Error> {
    let stdout = io::stdout().lock();
    let pass = |ok: bool| if ok { Outcome::Done } else { Outcome::Failed };
    match cli.command {
        Command::Solve { config } => {
            let cfg = RunConfig::load(&config)?;
            *hash = cfg.hash();
            commands::solve(&cfg, &mut Emitter::new(stdout, cfg.hash()))?;
            Ok(Outcome::Done)
        }
        Command::Spectrum { config, sweep_axis, sweep } => {
            let cfg = RunConfig::load(&config)?;
            *hash = cfg.hash();
            if sweep_axis > 2 {
                return Err(Error::Invalid("sweep axis must be 0, 1 or 2".into()));
            }
            let sweep = sweep.map(|s| parse_sweep(&s)).transpose()?.map(|v| (sweep_axis, v));
            commands::spectrum(&cfg, sweep, &mut Emitter::new(stdout, cfg.hash()))?;
            Ok(Outcome::Done)
        }
        Command::Cyl { config, n_list, check, table } => {
            let cfg = load(&config)?.unwrap_or_default();
            *hash = cfg.hash();
            let ok = commands::cyl(&cfg, n_list, &check, table, &mut Emitter::new(stdout, cfg.hash()))?;
            Ok(pass(ok))
        }
        Command::Oracle { s, lambda, out } => {
            *hash = RunConfig::default().hash();
            commands::oracle(s, lambda, out, &mut Emitter::new(stdout, hash.clone()))?;
            Ok(Outcome::Done)
        }
        Command::Verify { config, suite } => {
            let suite: Suite = suite.parse()?;
            let cfg = load(&config)?;
            *hash = cfg.clone().unwrap_or_default().hash();
            let report = commands::verify(cfg.as_ref(), suite, &mut Emitter::new(stdout, hash.clone()))?;
            eprint!("{report}");
            Ok(pass(report.passed()))
        }
        Command::SymmetryCheck { config } => {
            let cfg = RunConfig::load(&config)?;
            *hash = cfg.hash();
            let ok = commands::symmetry_check(&cfg, &mut Emitter::new(stdout, cfg.hash()))?;
            Ok(pass(ok))
        }
    }
}

fn init_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("POLARON_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::Invalid(format!("POLARON_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut hash = String::new();
    match init_threads().and_then(|_| run(cli, &mut hash)) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(3),
        Err(err) => {
            let record = json!({
                "kind": "error",
                "version": commands::VERSION,
                "config_hash": hash,
                "error": error_kind(&err),
                "message": err.to_string(),
            });
            println!("{record}");
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
