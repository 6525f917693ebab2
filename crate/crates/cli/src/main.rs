use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

mod commands;

use sadi_core::Mode;

#[derive(Debug, Parser)]
#[command(name = "sadi", version, about = "Decomposition-based day-ahead electric load forecasting")]
struct Cli {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Repeat for more log output on stderr.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InOut {
    /// Input CSV.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a CSV series, repair short gaps and write it back normalized.
    Ingest(InOut),
    /// Write the original series with its long-term, short-term and period parts.
    Decompose(InOut),
    /// Write the engineered feature matrix.
    Features(InOut),
    /// Fit a model and save it.
    Train {
        #[command(flatten)]
        io: InOut,
        #[arg(long, default_value = "sadi", value_parser = parse_mode)]
        mode: Mode,
        /// Train only on rows strictly before this instant.
        #[arg(long)]
        cutoff: Option<String>,
    },
    /// Forecast with a saved model.
    Predict {
        #[command(flatten)]
        io: InOut,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Forecast rows at or after this instant (default: every row).
        #[arg(long)]
        cutoff: Option<String>,
    },
    /// Score a CSV holding actual load and a `prediction` column.
    Evaluate {
        #[command(flatten)]
        io: InOut,
        /// Comma-separated success-rate thresholds.
        #[arg(long, value_parser = parse_eta_grid)]
        eta_grid: Option<EtaGrid>,
    },
    /// Export the additive model's shape functions, one CSV per feature.
    Explain {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Label extreme events given actual load and baseline `prediction`s.
    DetectExtremes(InOut),
    /// Compare SaDI against the single-model baselines on seeded synthetic data.
    Benchmark {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_parser = parse_eta_grid)]
        eta_grid: Option<EtaGrid>,
    },
}

#[derive(Debug, Clone)]
struct EtaGrid(Vec<f64>);

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Mode::ALL.iter().map(|m| m.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn parse_eta_grid(s: &str) -> Result<EtaGrid, String> {
    let values = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| format!("`{v}` is not a non-negative number"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EtaGrid(values))
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn config(path: Option<&Path>) -> sadi_core::Result<sadi_core::SaDIConfig> {
    match path {
        Some(p) => sadi_core::SaDIConfig::load(p),
        None => Ok(sadi_core::SaDIConfig::default()),
    }
}

fn run(cli: Cli) -> sadi_core::Result<()> {
    let mut cfg = config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(io) => commands::ingest(&cfg, &io.input, &io.out),
        Command::Decompose(io) => commands::decompose(&cfg, &io.input, &io.out),
        Command::Features(io) => commands::features(&cfg, &io.input, &io.out),
        Command::Train { io, mode, cutoff } => commands::train(&cfg, &io.input, &io.out, mode, cutoff.as_deref()),
        Command::Predict { io, model, cutoff } => commands::predict(&cfg, &model, &io.input, &io.out, cutoff.as_deref()),
        Command::Evaluate { io, eta_grid } => {
            if let Some(g) = eta_grid {
                cfg.metrics.eta_grid = g.0;
            }
            commands::evaluate(&cfg, &io.input, &io.out)
        }
        Command::Explain { model, out } => commands::explain(&model, &out),
        Command::DetectExtremes(io) => commands::detect_extremes(&cfg, &io.input, &io.out),
        Command::Benchmark { out, seed, eta_grid } => {
            if let Some(g) = eta_grid {
                cfg.metrics.eta_grid = g.0;
            }
            commands::benchmark(&cfg, seed, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.class());
            ExitCode::from(1)
        }
    }
}
