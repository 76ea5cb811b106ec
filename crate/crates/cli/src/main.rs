//! `hypnos`: batch front end for extraction, training, evaluation,
//! prediction and projection.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod dataset;
mod logging;

use config::Overrides;

/// Bad input from the caller: flags, config, or files that cannot be
/// parsed. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl UsageError {
    pub fn msg(m: impl Into<String>) -> anyhow::Error {
        anyhow::Error::new(UsageError(m.into()))
    }

    pub fn wrap(e: anyhow::Error) -> anyhow::Error {
        UsageError::msg(format!("{e:#}"))
    }
}

/// Some recordings failed while the rest completed. Maps to exit code 1.
#[derive(Debug)]
pub struct PartialFailure(pub usize);

impl fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} recording(s) failed", self.0)
    }
}

impl std::error::Error for PartialFailure {}

#[derive(Parser)]
#[command(name = "hypnos", version, about = "Sleep stage scoring from PSG recordings")]
struct Cli {
    /// Debug-level logging.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses one per CPU.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Number of cross-validation folds.
    #[arg(long)]
    k: Option<usize>,
    /// L2 penalty strength.
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            output_dir: self.output_dir.clone(),
            parallelism: self.parallelism,
            k: self.k,
            l2: self.l2,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print an EDF header and its signal specs as JSON.
    Inspect { path: PathBuf },
    /// Preprocess recordings and write one feature matrix per recording.
    Extract(RunArgs),
    /// Fit a model on every extracted recording.
    Train(RunArgs),
    /// Cross-validate (LFS) or score a transferred model (DT).
    Evaluate(RunArgs),
    /// Score one recording with a saved model.
    Predict {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        model: PathBuf,
        /// An already extracted recording of the configured dataset.
        #[arg(long, conflicts_with = "edf", required_unless_present = "edf")]
        recording: Option<String>,
        /// An EDF file to preprocess and extract on the fly.
        #[arg(long)]
        edf: Option<PathBuf>,
        /// Output CSV; defaults to `<output_dir>/predictions/<recording>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-component PCA of the quantile-transformed features.
    Project(RunArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Inspect { path } => commands::inspect(&path),
        Command::Extract(a) => commands::with_config(&a.config, &a.overrides(), commands::extract),
        Command::Train(a) => commands::with_config(&a.config, &a.overrides(), commands::train),
        Command::Evaluate(a) => commands::with_config(&a.config, &a.overrides(), commands::evaluate),
        Command::Project(a) => commands::with_config(&a.config, &a.overrides(), commands::project),
        Command::Predict { run, model, recording, edf, out } => {
            let target = match (recording, edf) {
                (Some(r), _) => commands::PredictTarget::Recording(r),
                (None, Some(p)) => commands::PredictTarget::Edf(p),
                (None, None) => return Err(UsageError::msg("pass --recording or --edf")),
            };
            commands::with_config(&run.config, &run.overrides(), |cfg, base| {
                commands::predict(cfg, base, &model, &target, out.as_deref())
            })
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    logging::init(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
