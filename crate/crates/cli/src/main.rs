//! `trawl`: run each pipeline stage on files, or the whole experiment matrix.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trawl_core::classify::ClassifierKind;
use trawl_core::features::FeatureMode;
use trawl_core::pipeline::ExperimentError;
use trawl_core::rebalance::BalanceMethod;

#[derive(Debug, Parser)]
#[command(name = "trawl", version, about = "Classify fishing vessel behavior from AIS tracks")]
pub struct Cli {
    /// JSON file with `pipeline`, `scenario` and `mapping` sections; all optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a raw AIS CSV into the normalized layout, logging rejected rows.
    Ingest {
        input: PathBuf,
    },
    /// Rebuild and clean tracks from normalized contacts.
    Clean {
        input: PathBuf,
        /// Only the minimum cleaning needed by later stages.
        #[arg(long)]
        minimum: bool,
    },
    /// Smooth tracks with the IMM filter (or finite differences with --raw).
    Filter {
        input: PathBuf,
        #[arg(long)]
        raw: bool,
    },
    /// Cut filtered tracks into fixed-length segments.
    Segment {
        input: PathBuf,
        /// One segment per track.
        #[arg(long)]
        full_track: bool,
    },
    /// Extract segment features.
    Features {
        input: PathBuf,
        #[arg(long, default_value = "full_44")]
        mode: FeatureMode,
    },
    /// Balance a feature file.
    Balance {
        input: PathBuf,
        #[arg(long, default_value = "smote")]
        method: BalanceMethod,
    },
    /// Train a classifier on a feature file.
    Train {
        input: PathBuf,
        #[arg(long, default_value = "tree")]
        classifier: ClassifierKind,
    },
    /// Evaluate a model on a feature file, or cross-validate with --kfold.
    Eval {
        input: PathBuf,
        #[arg(long, required_unless_present = "kfold")]
        model: Option<PathBuf>,
        #[arg(long)]
        kfold: bool,
        #[arg(long, default_value = "smote")]
        balance: BalanceMethod,
        #[arg(long, default_value = "tree")]
        classifier: ClassifierKind,
    },
    /// Generate a synthetic AIS scenario and its ground truth.
    Synth {
        #[arg(long)]
        fishing: Option<usize>,
        #[arg(long)]
        transit: Option<usize>,
        /// Inject the typical set of data defects.
        #[arg(long)]
        defects: bool,
    },
    /// Run the experiment matrix on a contacts file.
    Matrix {
        input: PathBuf,
        /// JSON list of experiment settings (defaults to the 30-experiment matrix).
        #[arg(long)]
        settings: Option<PathBuf>,
        /// Only the 12 complete-process experiments.
        #[arg(long, conflicts_with = "settings")]
        complete_only: bool,
        /// Cross-validate the Pareto-front members.
        #[arg(long)]
        kfold_pareto: bool,
    },
    /// Rebuild the tables and summary from a matrix output directory.
    Report {
        dir: PathBuf,
    },
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<trawl_core::Error>() {
            return match e {
                e if e.is_numerical() => EXIT_NUMERICAL,
                trawl_core::Error::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<ExperimentError>() {
            return if e.numerical { EXIT_NUMERICAL } else { EXIT_DATA };
        }
        if cause.downcast_ref::<commands::UsageError>().is_some() {
            return EXIT_USAGE;
        }
    }
    EXIT_DATA
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
