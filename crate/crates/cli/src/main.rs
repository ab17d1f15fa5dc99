//! `mvqc`: preprocess, train, evaluate and sweep multi-VQC classifiers.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data or I/O error,
//! 3 numerical failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{parse_range, SweepSettings};
use crate::config::Overrides;
use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "mvqc", version, about = "Chained variational quantum circuit classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV path, or a name resolved as `$MVQC_DATA_DIR/<name>.csv` (default `data/`).
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    n_components: Option<usize>,
    /// Shorthand for `--train.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `MVQC_OUTPUT_DIR` and the config file.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// `section.field=value`; `--section.field value` is accepted too.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> CliResult<config::RunConfig> {
        config::resolve(&Overrides {
            config_file: self.config.clone(),
            dataset: self.dataset.clone(),
            schema: self.schema.clone(),
            n_components: self.n_components,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            set: self.set.clone(),
        })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Explained variance per principal component of the whole dataset.
    PcaReport(RunArgs),
    /// Train one model and write model.json, pipeline.json, report.json, metrics.csv.
    Train(RunArgs),
    /// Recompute metrics of a trained run from its saved model and pipeline.
    Eval {
        #[arg(long)]
        run_dir: PathBuf,
        /// Defaults to `<run-dir>/eval.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Grid search over feature counts, chain lengths and circuit templates.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Feature counts: `a..b` (inclusive), `a,b,c` or one number.
        #[arg(long, default_value = "2", value_parser = counts)]
        features: Counts,
        /// Chain lengths, same syntax.
        #[arg(long, default_value = "1..3", value_parser = counts)]
        vqcs: Counts,
        /// Worker threads; 0 uses every available core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = mvqc_core::trainer::DEFAULT_MAX_LAYERS)]
        max_layers: usize,
        #[arg(long)]
        no_baseline: bool,
    },
    /// Class-weighted logistic regression on the same preprocessing.
    Baseline(RunArgs),
}

#[derive(Debug, Clone)]
struct Counts(Vec<usize>);

fn counts(text: &str) -> Result<Counts, String> {
    parse_range(text).map(Counts)
}

/// Rewrites `--a.b value` and `--a.b=value` into `--set a.b=value`.
fn expand_dotted(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let dotted = arg.strip_prefix("--").filter(|name| {
            let key = name.split('=').next().unwrap_or("");
            key.contains('.') && !key.starts_with('.')
        });
        match dotted {
            Some(name) if name.contains('=') => {
                out.push("--set".into());
                out.push(name.to_string());
            }
            Some(name) => {
                let value = it.next().unwrap_or_default();
                out.push("--set".into());
                out.push(format!("{name}={value}"));
            }
            None => out.push(arg),
        }
    }
    out
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::PcaReport(args) => commands::pca_report(&args.resolve()?),
        Command::Train(args) => commands::cmd_train(&args.resolve()?),
        Command::Eval { run_dir, output } => commands::cmd_eval(&run_dir, output.as_deref()),
        Command::Baseline(args) => commands::cmd_baseline(&args.resolve()?),
        Command::Sweep { run, features, vqcs, workers, max_layers, no_baseline } => {
            let settings = SweepSettings {
                feature_counts: features.0,
                n_vqcs: vqcs.0,
                max_layers,
                include_baseline: !no_baseline,
                workers,
            };
            commands::cmd_sweep(&run.resolve()?, &settings)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse_from(expand_dotted(std::env::args())) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(error::EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
