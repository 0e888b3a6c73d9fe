use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gnn_dissect::pipeline::{
    cmd_dissect, cmd_experiment, cmd_explain, cmd_train, read_kv_file, ExperimentKind, RunConfig,
};
use gnn_dissect::{Error, Result};

/// Train graph classifiers, dissect their neurons into logical concepts and build
/// class-level explanations.
#[derive(Parser)]
#[command(name = "gnn-dissect", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write checkpoint.json and training_log.csv.
    Train(Common),
    /// Search concepts for one layer's neurons and write concept_map.json and neuron_metrics.csv.
    Dissect(Common),
    /// Build global explanations and concept activation maps from a dissected model.
    Explain(Common),
    /// Run an epoch-budget or per-layer sweep.
    Experiment {
        /// `epochs` or `layers`.
        kind: ExperimentKind,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `synthetic-degree` or a directory holding TU-format files.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Beam search depth (formula length).
    #[arg(long)]
    depth: Option<usize>,
    /// Beam width.
    #[arg(long)]
    width: Option<usize>,
    /// 1-based layer to dissect (default: final).
    #[arg(long)]
    layer: Option<usize>,
    /// Class to explain (default: every class).
    #[arg(long)]
    class: Option<usize>,
    /// Comma-separated epoch budgets for the epochs experiment.
    #[arg(long)]
    epochs_list: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    concept_map: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut map = match &self.config {
            Some(path) => read_kv_file(path)?,
            None => BTreeMap::new(),
        };
        let mut set = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                map.insert(key.to_string(), v);
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        set("dataset", self.dataset.clone());
        set("out", path(&self.out));
        set("seed", self.seed.map(|v| v.to_string()));
        set("depth", self.depth.map(|v| v.to_string()));
        set("width", self.width.map(|v| v.to_string()));
        set("layer", self.layer.map(|v| v.to_string()));
        set("class", self.class.map(|v| v.to_string()));
        set("epochs_list", self.epochs_list.clone());
        set("epochs", self.epochs.map(|v| v.to_string()));
        set("checkpoint", path(&self.checkpoint));
        set("concept_map", path(&self.concept_map));
        RunConfig::from_map(&map)
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Train(c) => cmd_train(&c.resolve()?),
        Command::Dissect(c) => cmd_dissect(&c.resolve()?),
        Command::Explain(c) => cmd_explain(&c.resolve()?),
        Command::Experiment { kind, common } => cmd_experiment(&common.resolve()?, kind),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_input_error() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}
