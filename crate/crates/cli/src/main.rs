mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Error in the invocation itself: bad flags or missing input paths.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "empathy",
    version,
    about = "Detect empathy from facial-behavior time series"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides seeds in the configuration
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of worker threads
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset
    Synth,
    /// Parse and clean a session directory
    Ingest {
        #[arg(long)]
        input: PathBuf,
    },
    /// Score questionnaires and split them into classes
    Label {
        #[arg(long)]
        questionnaires: PathBuf,
    },
    /// Build the summary table and 1 Hz sequences
    Featurize {
        #[arg(long)]
        input: PathBuf,
        /// Labels from `label`; without them the table is unlabelled
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Fit one model on the full table
    Train {
        #[arg(long)]
        table: PathBuf,
    },
    /// Repeated stratified cross-validation, or a grid search
    Evaluate {
        #[arg(long)]
        table: PathBuf,
    },
    /// McNemar test between two reports
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Feature rankings, class curves and group ablation
    Analyze {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value_t = 25)]
        top_n: usize,
        /// Sequences from `featurize`, for class curves
        #[arg(long, requires = "labels")]
        sequences: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Raw feature to plot
        #[arg(long, default_value = "AU14_r")]
        feature: String,
        /// Also run per-group cross-validation
        #[arg(long)]
        subsets: bool,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<empathy_core::Error>() {
            return if e.is_validation() { 3 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
