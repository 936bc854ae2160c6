//! `cmg`: subcommand front-end for the forecasting pipeline. Every stage
//! writes its artifacts under one output directory and prints a single
//! summary line; exit codes are 0 (ok), 1 (usage), 2 (data/validation),
//! 3 (numerical failure).

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cmg_core::{CmgError, ErrorCategory};

use config::FileConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(CmgError),
}

impl From<CmgError> for CliError {
    fn from(e: CmgError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(CmgError::from(e))
    }
}

#[derive(Parser)]
#[command(name = "cmg", version, about = "Chaos-gated sentiment forecasting over OHLC series")]
struct Cli {
    /// Sectioned key=value config file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory (default: $CMG_OUT_DIR, then ./out).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Top-level seed; every randomized stage derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Model and training overrides shared by train and compare.
#[derive(Args, Debug, Default, Clone)]
pub struct ModelArgs {
    /// Event-window length fed to the sequence model.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub n_heads: Option<usize>,
    #[arg(long)]
    pub d_ff: Option<usize>,
    #[arg(long)]
    pub lstm_hidden: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Fraction of training windows held out for validation.
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// Fraction of days forming the held-out test period.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Events required before expanding standardization is trusted.
    #[arg(long)]
    pub min_history: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate seeded synthetic chaotic OHLC data
    Synth {
        #[arg(long)]
        days: Option<usize>,
        #[arg(long)]
        bars_per_day: Option<usize>,
        /// Logistic map parameter in (3.57, 4]
        #[arg(long)]
        r: Option<f64>,
        /// Per-bar volatility scale
        #[arg(long)]
        vol: Option<f64>,
    },
    /// Validate an OHLC CSV and rewrite it in canonical form
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the input file stem
        #[arg(long)]
        symbol: Option<String>,
    },
    /// Compute the indicator feature matrix
    Features {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the chaos battery and admission gate on a series
    Chaos {
        #[arg(long)]
        input: PathBuf,
        /// close | log-return
        #[arg(long)]
        series: Option<String>,
        /// Embedding dimension
        #[arg(long)]
        m: Option<usize>,
        /// Embedding delay (default: first autocorrelation drop below 1/e)
        #[arg(long)]
        tau: Option<usize>,
        #[arg(long)]
        theiler: Option<usize>,
        /// Lower divergence-fit step
        #[arg(long)]
        fit_lo: Option<usize>,
        /// Upper divergence-fit step
        #[arg(long)]
        fit_hi: Option<usize>,
        /// Entropy tolerance as a fraction of the standard deviation
        #[arg(long)]
        r_frac: Option<f64>,
    },
    /// Detect crossover events and build standardized six-class targets
    Target {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        min_history: Option<usize>,
    },
    /// Train the sequence model on one series
    Train {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Score a trained checkpoint's daybreak calls on the held-out days
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        min_history: Option<usize>,
    },
    /// Full comparison: sequence model against three classical baselines
    Compare {
        /// OHLC CSV inputs; repeat for several indices
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
        /// Generate one synthetic series instead of reading inputs
        #[arg(long)]
        synth: bool,
        #[arg(long)]
        days: Option<usize>,
        #[arg(long)]
        bars_per_day: Option<usize>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        vol: Option<f64>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Export delay-embedded coordinates for plotting
    PhaseSpace {
        #[arg(long)]
        input: PathBuf,
        /// close | log-return
        #[arg(long)]
        series: Option<String>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        tau: Option<usize>,
        /// Row range like 100..600
        #[arg(long)]
        window: Option<String>,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            match e.category() {
                ErrorCategory::Data => 2,
                ErrorCategory::Numerical => 3,
            }
        }
    }
}

fn resolve_out(cli: &Cli, cfg: &FileConfig) -> PathBuf {
    if let Some(p) = &cli.out {
        return p.clone();
    }
    if let Some(p) = cfg.get("pipeline", "out_dir") {
        return PathBuf::from(p);
    }
    if let Ok(p) = std::env::var("CMG_OUT_DIR") {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    PathBuf::from("out")
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    let cfg = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let out = resolve_out(&cli, &cfg);
    std::fs::create_dir_all(&out)?;
    let ctx = commands::Ctx { cfg: &cfg, out, seed_flag: cli.seed };
    match cli.cmd {
        Cmd::Synth { days, bars_per_day, r, vol } => {
            commands::synth(&ctx, days, bars_per_day, r, vol)
        }
        Cmd::Ingest { input, symbol } => commands::ingest(&ctx, &input, symbol),
        Cmd::Features { input } => commands::features(&ctx, &input),
        Cmd::Chaos { input, series, m, tau, theiler, fit_lo, fit_hi, r_frac } => {
            commands::chaos(&ctx, &input, series, m, tau, theiler, fit_lo, fit_hi, r_frac)
        }
        Cmd::Target { input, min_history } => commands::target(&ctx, &input, min_history),
        Cmd::Train { input, model } => commands::train(&ctx, &input, &model),
        Cmd::Evaluate { input, checkpoint, test_fraction, min_history } => {
            commands::evaluate(&ctx, &input, &checkpoint, test_fraction, min_history)
        }
        Cmd::Compare { inputs, synth, days, bars_per_day, r, vol, model } => {
            commands::compare(&ctx, &inputs, synth, days, bars_per_day, r, vol, &model)
        }
        Cmd::PhaseSpace { input, series, m, tau, window } => {
            commands::phase_space(&ctx, &input, series, m, tau, window)
        }
    }
}
