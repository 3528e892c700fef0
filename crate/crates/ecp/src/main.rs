use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kerr_ecp::format::{self, Format};
use kerr_ecp::verify::{run_verify, VerifyOptions};
use kerr_ecp::{Error, Parallel, Result, DEFAULT_SEED};
use kerr_ecp_core::analytics::yield_surface;
use kerr_ecp_core::protocol::{run_session_with, SessionConfig, Strategy};
use kerr_ecp_core::qstate::PairSource;

#[derive(Parser)]
#[command(
    version,
    about = "Entanglement concentration with cross-Kerr parity checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterated concentration of two-photon sources.
    Concentrate(SessionArgs),
    /// Iterated concentration of N-photon GHZ-class sources.
    Ghz {
        #[command(flatten)]
        session: SessionArgs,
        /// Number of parties (photons per source).
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..=16))]
        parties: u64,
    },
    /// Success probability and yield over an α × round grid.
    Surface {
        /// Number of α points spanning [0, 1/√2].
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(2..))]
        steps: u32,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
        n_max: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Runs the verification suite; exits 1 if any check fails.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    FullState,
    MeasureReduce,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::FullState => Strategy::FullState,
            StrategyArg::MeasureReduce => Strategy::MeasureAndReduce,
        }
    }
}

#[derive(Args)]
struct SessionArgs {
    /// Real amplitude of |H…H⟩, in (0, 1]; β = √(1 − α²).
    #[arg(long, value_parser = parse_alpha)]
    alpha: f64,
    /// Number of initial source states.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..1 << 40))]
    pairs: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    rounds: u32,
    #[arg(long, value_enum, default_value_t = StrategyArg::FullState)]
    strategy: StrategyArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to csv for a `.csv` output path and json otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if a > 0.0 && a <= 1.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0, 1], got {s}"))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        }),
        None => Ok(io::stdout().lock().write_all(text.as_bytes())?),
    }
}

fn session(command: &str, args: &SessionArgs, parties: usize) -> Result<()> {
    let cfg = SessionConfig {
        source: PairSource::from_real_alpha(args.alpha)?,
        parties,
        initial_pairs: args.pairs,
        max_rounds: args.rounds,
        strategy: args.strategy.into(),
        seed: args.seed,
    };
    let report = run_session_with(&Parallel, &cfg)?;
    let fmt = args
        .format
        .unwrap_or_else(|| match args.out.as_deref().and_then(Path::extension) {
            Some(ext) if ext == "csv" => Format::Csv,
            _ => Format::Json,
        });
    let text = match fmt {
        Format::Csv => format::session_csv(&report)?,
        Format::Json => format::to_json(command, &report)?,
    };
    emit(args.out.as_deref(), &text)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Concentrate(args) => session("concentrate", &args, 2)?,
        Command::Ghz {
            session: args,
            parties,
        } => session("ghz", &args, parties as usize)?,
        Command::Surface {
            steps,
            n_max,
            out,
            format: fmt,
        } => {
            let table = yield_surface(steps, n_max)?;
            let text = match fmt {
                Format::Csv => format::surface_csv(&table)?,
                Format::Json => format::to_json("surface", &table)?,
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Verify { seed, json, out } => {
            let report = run_verify(&VerifyOptions::new(seed))?;
            let text = if json {
                format::to_json("verify", &report)?
            } else {
                report.to_text()
            };
            emit(None, &text)?;
            if out.is_some() {
                emit(out.as_deref(), &text)?;
            }
            return Ok(report.all_pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
