// SPDX-License-Identifier: Apache-2.0

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<memxbar::Error> for CliError {
    fn from(e: memxbar::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "memxbar", version, about = "Memristive crossbar ELM simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file (flat key/value object).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// two-crossbar-full | two-crossbar-semi | one-crossbar-full | one-crossbar-semi
    #[arg(long, global = true, value_name = "TAG")]
    topology: Option<String>,
    /// Preset name (iris, diabetes, australian, mnist) or CSV path.
    #[arg(long, global = true, value_name = "TAG|PATH")]
    dataset: Option<String>,
    /// Directory holding the preset dataset files.
    #[arg(long, global = true, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Model snapshot to evaluate (default: <out>/model.json).
    #[arg(long, global = true, value_name = "PATH")]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train an ELM in situ and write model, history and accuracy.
    Train,
    /// Evaluate a saved model on the configured dataset.
    Eval,
    /// Compare the four crossbar topologies.
    CompareTopologies,
    /// Crossbar and digital power per topology.
    Power,
    /// Transistor counts for square layers of doubling size.
    Scaling,
    /// Device-variation Monte Carlo study.
    Sweep,
}

impl Common {
    fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        if let Some(s) = self.seed {
            m.insert("seed".into(), s.into());
        }
        let path = |p: &PathBuf| Value::from(p.to_string_lossy().into_owned());
        if let Some(p) = &self.out {
            m.insert("out".into(), path(p));
        }
        if let Some(t) = &self.topology {
            m.insert("topology".into(), t.clone().into());
        }
        if let Some(d) = &self.dataset {
            m.insert("dataset".into(), d.clone().into());
        }
        if let Some(p) = &self.data_dir {
            m.insert("data_dir".into(), path(p));
        }
        if let Some(p) = &self.model {
            m.insert("model".into(), path(p));
        }
        m
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = config::resolve(cli.common.config.as_deref(), cli.common.overrides())?;
    settings.validate()?;
    match cli.command {
        Command::Train => commands::train(&settings),
        Command::Eval => commands::eval(&settings),
        Command::CompareTopologies => commands::compare_topologies(&settings),
        Command::Power => commands::power(&settings),
        Command::Scaling => commands::scaling(&settings),
        Command::Sweep => commands::sweep(&settings),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors are validation failures; --help and --version are not
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("memxbar: {e}");
            match e {
                CliError::Validation(_) => ExitCode::from(1),
                CliError::Runtime(_) => ExitCode::from(2),
            }
        }
    }
}
