mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "figsep", version, about = "Compound figure classification and separation")]
pub struct Cli {
    /// Seed for all random choices; overrides the seed in a synth spec.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "FIGSEP_WORKERS", default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic corpus with exact ground truth.
    Synth(SynthArgs),
    /// Extract classifier features for every corpus image (JSON Lines).
    Features(FeaturesArgs),
    /// Train the compound/non-compound classifier.
    TrainCfc(TrainCfcArgs),
    /// Train the illustration classifier that routes separation.
    TrainIllu(TrainIlluArgs),
    /// Classify feature records as compound or not.
    Classify(ClassifyArgs),
    /// Separate every corpus image into subfigure boxes.
    Separate(SeparateArgs),
    /// Score predicted boxes against ground truth.
    Evaluate(EvaluateArgs),
    /// Classify, separate predicted compounds and evaluate in one pass.
    Chain(ChainArgs),
    /// Optimize separation parameters on a corpus.
    Tune(TuneArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Spec JSON; built-in defaults when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Three-digit feature set, e.g. 434.
    #[arg(long, default_value = "434")]
    pub set: String,
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long, default_value_t = 8)]
    pub q: usize,
    #[arg(long, default_value_t = 3)]
    pub h: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Logreg,
    Svm,
}

#[derive(Args, Debug)]
pub struct TrainOptions {
    #[arg(long, value_enum, default_value = "logreg")]
    pub algo: Algo,
    /// L2 weight (logistic regression).
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Box constraint (SVM).
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
}

#[derive(Args, Debug)]
pub struct TrainCfcArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Corpus providing the compound labels.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub train: TrainOptions,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainIlluArgs {
    /// Corpus with per-subfigure meta labels.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "simple2")]
    pub feature_kind: String,
    /// How subfigure labels become one image label.
    #[arg(long, default_value = "greedy")]
    pub strategy: String,
    #[command(flatten)]
    pub train: TrainOptions,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DecisionArgs {
    /// Cost of a missed compound relative to a false alarm.
    #[arg(long, conflicts_with = "threshold")]
    pub alpha: Option<f64>,
    /// Minimum compound probability; equivalent to alpha = (1 - d) / d.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub decision: DecisionArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EngineArgs {
    /// Parameter JSON; the tuned defaults when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Named parameter set (optimal|initial), used when --params is absent.
    #[arg(long, default_value = "optimal")]
    pub preset: String,
    /// Illustration model for routing.
    #[arg(long, conflicts_with = "routing")]
    pub illu_model: Option<PathBuf>,
    /// Fixed routing (band|edge) instead of a model.
    #[arg(long)]
    pub routing: Option<String>,
    /// once | per-subfigure
    #[arg(long, default_value = "once")]
    pub variant: String,
}

#[derive(Args, Debug)]
pub struct SeparateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Directory for PNG overlays of the detected boxes.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Ground-truth annotations JSON, or a corpus directory.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// imageclef | nlm
    #[arg(long, default_value = "imageclef")]
    pub protocol: String,
    /// Apply the single-subfigure convention of chain scoring.
    #[arg(long)]
    pub chain: bool,
    /// Parameter JSON that produced the predictions, embedded in the report.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ChainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Compound classifier; without it every image is treated as compound.
    #[arg(long)]
    pub cfc_model: Option<PathBuf>,
    #[command(flatten)]
    pub decision: DecisionArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, default_value = "imageclef")]
    pub protocol: String,
    /// Where to write the per-image boxes.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Search space JSON.
    #[arg(long)]
    pub space: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, default_value = "imageclef")]
    pub protocol: String,
    /// Best parameter set (full parameter JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Evaluation trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
