//! `relwalk` command line: dataset generation, training, walk explanations,
//! node-flipping evaluation and DOT export, each writing a manifest.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relwalk::eval::Task;
use relwalk::Architecture;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "relwalk", version, about = "Relevant-walk explanations for graph neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic dataset as JSON lines.
    GenData(GenDataArgs),
    /// Train a model on a dataset; writes model JSON and a per-epoch CSV log.
    Train(TrainArgs),
    /// Explain one graph as relevance-scored walks.
    Explain(ExplainArgs),
    /// Node-flipping benchmark over a range of graphs.
    FlipEval(FlipEvalArgs),
    /// Render an explanation JSON as Graphviz DOT.
    ExportDot(ExportDotArgs),
}

#[derive(Args, Serialize)]
pub struct GenDataArgs {
    /// Number of graphs (classes alternate 0, 1, 0, ...).
    #[arg(long)]
    pub count: usize,
    /// Nodes per graph.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "gin")]
    pub arch: Architecture,
    #[arg(long, default_value_t = 2)]
    pub blocks: usize,
    /// Hidden width; defaults to 128 for gcn and 32 otherwise.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.003)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Learning-rate multiplier applied at each quarter of training.
    #[arg(long, default_value_t = 0.5)]
    pub lr_decay: f64,
    /// Trailing fraction of the dataset held out for accuracy reporting.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train without biases, so that walk relevances decompose the output exactly.
    #[arg(long)]
    pub zero_bias: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch CSV log; defaults to `<out>.log.csv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Lrp,
    Gi,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasModeArg {
    Absorb,
    Strict,
}

#[derive(Args, Serialize)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Line of the dataset to explain (0-based).
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, value_enum, default_value = "lrp")]
    pub method: MethodArg,
    /// Per-block γ, comma separated; defaults to 2,1,1,...
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Where bias contributions go: absorbed into the denominator or dropped.
    #[arg(long, value_enum, default_value = "absorb")]
    pub bias_mode: BiasModeArg,
    /// Walks whose partial relevance stays below this L1 norm are pruned.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long, default_value = "diff", value_parser = ["diff", "logit0", "logit1"])]
    pub target: String,
    /// Keep only the highest-ranked walks.
    #[arg(long)]
    pub top: Option<usize>,
    /// Evaluate the model with its biases switched off.
    #[arg(long)]
    pub zero_bias: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a DOT rendering.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct FlipEvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// First dataset line to evaluate.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Number of graphs; defaults to the rest of the dataset.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "gnn-lrp,gnn-gi,first-order-gi,first-order-lrp,random"
    )]
    pub providers: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "activation,pruning")]
    pub task: Vec<Task>,
    /// Every this many steps the greedy search moves a whole batch of nodes.
    #[arg(long, default_value_t = 5)]
    pub coarse_interval: usize,
    #[arg(long, default_value_t = 5)]
    pub random_repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving rows.csv, summary.csv and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Serialize)]
pub struct ExportDotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Train(a) => commands::train(a),
        Command::Explain(a) => commands::explain(a),
        Command::FlipEval(a) => commands::flip_eval(a),
        Command::ExportDot(a) => commands::export_dot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.kind.code())
        }
    }
}
