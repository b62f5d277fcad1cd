//! `stgap` command-line front end.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "stgap", version, about = "Fill spatio-temporal gaps in gridded tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a field, punch gaps into it and write the result.
    Generate(GenerateArgs),
    /// Train a DGIN model on the `train` split of a data directory.
    Train(TrainArgs),
    /// Fill every gap of a tensor with a trained model.
    Fill(FillArgs),
    /// Score methods on the `test` split of a data directory.
    Eval(EvalArgs),
    /// Time methods on the `test` split, one thread, same gaps for all.
    Bench(BenchArgs),
    /// Finite-difference check of the DGIN gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// TOML file with `[field]` and `[gaps]` tables; defaults when omitted.
    #[arg(long)]
    pub spec: Option<std::path::PathBuf>,
    /// Masked tensor of the training split.
    #[arg(long, requires = "gaps")]
    pub out: Option<std::path::PathBuf>,
    /// Gap plan matching `--out`.
    #[arg(long, requires = "out")]
    pub gaps: Option<std::path::PathBuf>,
    /// Ground truth matching `--out`.
    #[arg(long, requires = "out")]
    pub truth: Option<std::path::PathBuf>,
    /// Directory that receives the train, val and test splits.
    #[arg(long)]
    pub data: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: std::path::PathBuf,
    /// Patch side, odd.
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    /// Context steps on each side of a gap.
    #[arg(long, default_value_t = 5)]
    pub horizon: usize,
    #[arg(long)]
    pub enc_dim: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub attn_dim: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Epochs between validation passes; 0 disables them. The epoch with
    /// the lowest validation loss is kept when a `val` split exists.
    #[arg(long, default_value_t = 10)]
    pub eval_every: usize,
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct FillArgs {
    #[arg(long)]
    pub model: std::path::PathBuf,
    #[arg(long)]
    pub tensor: std::path::PathBuf,
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Use only the past branch.
    #[arg(long)]
    pub history_only: bool,
}

#[derive(Args, Debug)]
pub struct MethodArgs {
    /// Comma-separated: mean, idw, kriging, kriging-full, dgin, dgin-history.
    #[arg(long, value_delimiter = ',', default_value = "mean,idw,kriging")]
    pub methods: Vec<String>,
    /// Checkpoint for the dgin methods.
    #[arg(long)]
    pub model: Option<std::path::PathBuf>,
    #[arg(long)]
    pub data: std::path::PathBuf,
    /// Split to score.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// History length of the mean baseline.
    #[arg(long, default_value_t = 5)]
    pub mean_history: usize,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub methods: MethodArgs,
    /// CSV report path.
    #[arg(long)]
    pub report: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub methods: MethodArgs,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    #[arg(long, default_value_t = 3)]
    pub horizon: usize,
    #[arg(long, default_value_t = 4)]
    pub enc_dim: usize,
    #[arg(long, default_value_t = 5)]
    pub hidden: usize,
    #[arg(long, default_value_t = 4)]
    pub attn_dim: usize,
    #[arg(long, default_value_t = 3)]
    pub delta_t: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Number of random models to check, seeds `seed..seed+count`.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    commands::init_threads()?;
    match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Train(a) => commands::train(&a),
        Command::Fill(a) => commands::fill(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Gradcheck(a) => commands::gradcheck(&a),
    }
}
