//! `betae`: ingest graphs, generate query benchmarks, train, evaluate and
//! answer queries.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or format
//! error, 3 numerical abort. Verbosity is read from `BETAE_LOG`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use betae::model::UnionMode;
use betae::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Seed used by every randomized command unless `--seed` is given.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Parser, Debug)]
#[command(name = "betae", version, about = "Beta embeddings for logical queries over knowledge graphs")]
struct Cli {
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a graph directory, print split sizes and write a checksum manifest.
    Ingest(IngestArgs),
    /// Sample train/valid/test query datasets.
    Generate(GenerateArgs),
    /// Train a model (or resume training) on a generated dataset.
    Train(TrainArgs),
    /// Filtered MRR and Hits@K on a dataset split.
    Eval(EvalArgs),
    /// Correlation between query entropy and answer-set size.
    Correlate(CorrelateArgs),
    /// ROC-AUC of query entropy for separating empty from non-empty queries.
    ClassifyEmpty(ClassifyArgs),
    /// Rank all entities for one query.
    Answer(AnswerArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Directory with entities.dict, relations.dict, train.txt, valid.txt, test.txt.
    #[arg(long)]
    pub graph_dir: PathBuf,
    /// Materialize inverse relations r⁻¹ as r + |R|.
    #[arg(long)]
    pub add_inverse: bool,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Output directory for the query files.
    #[arg(long)]
    pub dataset_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Training queries per conjunctive structure (negation structures get a tenth).
    #[arg(long, default_value_t = 5000)]
    pub train_queries: usize,
    /// Validation and test queries per structure.
    #[arg(long, default_value_t = 500)]
    pub eval_queries: usize,
    /// Cap on the answer count of validation/test queries.
    #[arg(long, default_value_t = 100)]
    pub max_answers: usize,
    /// Enumerate every held-out (head, relation) pair as a 1p query.
    #[arg(long)]
    pub exhaustive_1p: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub dataset_dir: PathBuf,
    /// Checkpoint file to write (and to read with --resume).
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Continue from the existing checkpoint.
    #[arg(long)]
    pub resume: bool,
    /// `key = value` file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Metrics log; defaults to the checkpoint path with a `.metrics.tsv` suffix.
    #[arg(long)]
    pub metrics_log: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub neg_k: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// One projection network per relation.
    #[arg(long)]
    pub per_relation_mlp: bool,
    #[arg(long, value_enum)]
    pub attention: Option<AttentionArg>,
    /// Use the full-scale hyperparameters as the base configuration.
    #[arg(long)]
    pub full_scale: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionArg {
    Global,
    PerDim,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnionArg {
    Dnf,
    Dm,
    Both,
}

impl UnionArg {
    pub fn modes(self) -> Vec<UnionMode> {
        match self {
            UnionArg::Dnf => vec![UnionMode::Dnf],
            UnionArg::Dm => vec![UnionMode::Dm],
            UnionArg::Both => vec![UnionMode::Dnf, UnionMode::Dm],
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitArg {
    Valid,
    Test,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub dataset_dir: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(long, value_enum, default_value_t = UnionArg::Both)]
    pub union: UnionArg,
    /// Hits@K cutoffs.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 3, 10])]
    pub ks: Vec<usize>,
    /// Per-pair ranks; with `--union both` the mode name is inserted before the extension.
    #[arg(long)]
    pub rank_dump: Option<PathBuf>,
    /// Line-delimited JSON metrics.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub dataset_dir: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Queries per pool per structure.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Non-empty queries must have more than this many answers.
    #[arg(long, default_value_t = 5)]
    pub min_answers: usize,
}

#[derive(Args, Debug)]
pub struct AnswerArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Entity names are printed when given.
    #[arg(long)]
    pub graph_dir: Option<PathBuf>,
    /// Query in the s-expression language, e.g. `(p 0 (e 3))`.
    pub query: String,
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = UnionArg::Dnf)]
    pub union: UnionArg,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BETAE_LOG", "warn")).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Generate(a) => commands::generate(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Correlate(a) => commands::correlate(&a),
        Command::ClassifyEmpty(a) => commands::classify_empty(&a),
        Command::Answer(a) => commands::answer(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
