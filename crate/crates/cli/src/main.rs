//! `gravrank`: train gravity-inspired graph autoencoders on a similar-items
//! graph and rank similar items for cold nodes.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RunConfig, KEYS};

/// An input problem (bad configuration, missing or malformed file, refused
/// checkpoint) exits with 2; anything else that fails exits with 1.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<gravrank::Error> for CliError {
    fn from(e: gravrank::Error) -> Self {
        use gravrank::Error as E;
        match e {
            E::NonFiniteLoss { .. } | E::NonFiniteGradient(_) | E::NoConvergence { .. } => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn key_help() -> String {
    let mut s = String::from("Configuration keys (key=value, --key value, --key=value, or --config <file>):\n");
    for (k, default, help) in KEYS {
        let default = if default.is_empty() { String::new() } else { format!(" [default: {default}]") };
        s.push_str(&format!("  {k:<20} {help}{default}\n"));
    }
    s.push_str("\nPass --force to use a checkpoint whose data, split or settings do not match.");
    s
}

#[derive(Parser)]
#[command(name = "gravrank", version, about = "Cold-start similar-item ranking with gravity-inspired graph autoencoders")]
#[command(after_help = key_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate dataset files and write the dense id table.
    Ingest(Overrides),
    /// Draw a seeded train/valid/test node split.
    Split(Overrides),
    /// Train one model and save a checkpoint and loss trace.
    Train(Overrides),
    /// Project cold nodes through a trained encoder.
    Project(Overrides),
    /// Write top-K lists for cold queries from a checkpoint or baseline.
    Rank(Overrides),
    /// Score a checkpoint, a baseline, or freshly trained runs.
    Eval(Overrides),
    /// Train and evaluate once per lambda; write reports and bias profiles.
    SweepLambda(Overrides),
    /// Correlate learned masses with popularity and centrality measures.
    AnalyzeMasses(Overrides),
    /// Write warm and cold embedding rows.
    ExportEmbedding(Overrides),
    /// Generate the planted synthetic dataset and a split.
    MakeSample(Overrides),
}

#[derive(clap::Args)]
struct Overrides {
    /// Configuration overrides and flags.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "KEY=VALUE")]
    args: Vec<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (handler, o): (fn(&RunConfig) -> Result<(), CliError>, Overrides) = match cli.command {
        Command::Ingest(o) => (commands::ingest, o),
        Command::Split(o) => (commands::split, o),
        Command::Train(o) => (commands::train_cmd, o),
        Command::Project(o) => (commands::project, o),
        Command::Rank(o) => (commands::rank, o),
        Command::Eval(o) => (commands::eval, o),
        Command::SweepLambda(o) => (commands::sweep_lambda, o),
        Command::AnalyzeMasses(o) => (commands::analyze_masses, o),
        Command::ExportEmbedding(o) => (commands::export_embedding, o),
        Command::MakeSample(o) => (commands::make_sample, o),
    };
    handler(&RunConfig::from_args(&o.args)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Input(_) => 2,
                CliError::Runtime(_) => 1,
            })
        }
    }
}
