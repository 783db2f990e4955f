use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use claimx_core::eval::EvalSplit;
use claimx_core::tagger::Pooling;
use claimx_core::{TaggerConfig, TrainConfig};
use serde::Serialize;

/// Claim extraction for scientific abstracts.
///
/// Every command writes `manifest.json` (command, resolved config, seed and
/// SHA-256 of each input file) next to its other outputs in `--out-dir`.
#[derive(Debug, Parser)]
#[command(name = "claimx", version, propagate_version = true)]
pub struct Cli {
    /// Log filter for stderr, e.g. `info` or `claimx_core=debug`.
    #[arg(long, global = true, env = "CLAIMX_LOG", default_value = "info")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a discourse tagger on a PubMedRCT-format corpus.
    Pretrain(PretrainArgs),
    /// Fine-tune a pretrained discourse tagger on claim annotations.
    Transfer(TransferArgs),
    /// Train a claim tagger without discourse pretraining.
    Train(TrainArgs),
    /// Evaluate a model or baseline on one split of a claim corpus.
    Eval(EvalArgs),
    /// Predict claims for the abstracts in a plain-text file.
    Predict(PredictArgs),
    /// Run the prediction and annotation HTTP service.
    Serve(ServeArgs),
    /// Print corpus statistics and the claim position histogram.
    Stats(StatsArgs),
    /// Fill in majority-vote gold labels and report annotator agreement.
    Vote(VoteArgs),
}

pub fn existing_file(s: &str) -> Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("`{s}` is not an existing file"))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Directory for checkpoints, reports, predictions and the manifest.
    #[arg(long, default_value = "claimx-out")]
    pub out_dir: PathBuf,

    /// Seed for splits, initialisation, dropout and shuffling.
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
}

/// Tagger architecture overrides; unset values keep the defaults.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Word vectors in GloVe or word2vec text format.
    #[arg(long, value_parser = existing_file)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// Hidden size of each direction of the word Bi-LSTM.
    #[arg(long)]
    pub word_hidden: Option<usize>,
    #[arg(long)]
    pub ff_hidden: Option<usize>,
    /// Hidden size of an optional sentence-level Bi-LSTM.
    #[arg(long)]
    pub sentence_hidden: Option<usize>,
    #[arg(long, value_enum)]
    pub pooling: Option<PoolingArg>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Per-sentence softmax output instead of a CRF.
    #[arg(long)]
    pub no_crf: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum PoolingArg {
    Final,
    Mean,
}

impl ModelArgs {
    pub fn tagger_config(&self, seed: u64) -> TaggerConfig {
        let d = TaggerConfig::default();
        TaggerConfig {
            embedding_dim: self.embedding_dim.unwrap_or(d.embedding_dim),
            word_hidden: self.word_hidden.unwrap_or(d.word_hidden),
            ff_hidden: self.ff_hidden.unwrap_or(d.ff_hidden),
            sentence_hidden: self.sentence_hidden.or(d.sentence_hidden),
            pooling: match self.pooling {
                Some(PoolingArg::Final) => Pooling::FinalStates,
                Some(PoolingArg::Mean) => Pooling::Mean,
                None => d.pooling,
            },
            dropout: self.dropout.unwrap_or(d.dropout),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            min_count: self.min_count.unwrap_or(d.min_count),
            use_crf: !self.no_crf,
            seed,
            ..d
        }
    }

    pub fn embeddings(&self) -> Option<&Path> {
        self.embeddings.as_deref()
    }
}

/// Optimiser overrides for one training stage.
#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimArgs {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Early-stopping patience in epochs.
    #[arg(long)]
    pub patience: Option<usize>,
}

impl OptimArgs {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            lr: self.lr.unwrap_or(d.lr),
            max_epochs: self.epochs.unwrap_or(d.max_epochs),
            early_stop_patience: self.patience.unwrap_or(d.early_stop_patience),
            seed,
            ..d
        }
    }
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// Training abstracts in PubMedRCT format.
    #[arg(long, value_parser = existing_file)]
    pub corpus: PathBuf,
    /// Validation abstracts; without it the training set is monitored.
    #[arg(long, value_parser = existing_file)]
    pub val: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// Discourse checkpoint written by `pretrain`.
    #[arg(long, value_parser = existing_file)]
    pub pretrained: PathBuf,
    /// Claim corpus (JSON lines); its seeded train/validation splits are used.
    #[arg(long, value_parser = existing_file)]
    pub corpus: PathBuf,
    /// Epochs of head-only training before unfreezing.
    #[arg(long, default_value_t = 5)]
    pub frozen_epochs: usize,
    /// Keep word embeddings fixed during fine-tuning.
    #[arg(long)]
    pub freeze_embeddings: bool,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Claim annotations only.
    Scratch,
    /// Discourse corpus with conclusion sentences as claims.
    ConclusionAsClaim,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Claim corpus for `scratch`, PubMedRCT corpus for `conclusion-as-claim`.
    #[arg(long, value_parser = existing_file)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "scratch")]
    pub regime: Regime,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    LastSentence,
    RuleBased,
    Sif,
    SifDiscourse,
    Tagger,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Claim corpus (JSON lines).
    #[arg(long, value_parser = existing_file)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "test", value_parser = parse_split)]
    pub split: EvalSplit,
    /// Claim checkpoint for `tagger`.
    #[arg(long, value_parser = existing_file, required_if_eq("model", "tagger"))]
    pub checkpoint: Option<PathBuf>,
    /// Discourse checkpoint for `sif-discourse`.
    #[arg(long, value_parser = existing_file, required_if_eq("model", "sif-discourse"))]
    pub discourse_checkpoint: Option<PathBuf>,
    /// Rule file for `rule-based`; the bundled rules otherwise.
    #[arg(long, value_parser = existing_file)]
    pub rules: Option<PathBuf>,
    /// Word vectors for the SIF baselines.
    #[arg(long, value_parser = existing_file)]
    pub embeddings: Option<PathBuf>,
    /// `token count` lines for SIF weights; training-split counts otherwise.
    #[arg(long, value_parser = existing_file)]
    pub freqs: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

fn parse_split(s: &str) -> Result<EvalSplit, String> {
    s.parse().map_err(|e: claimx_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Claim checkpoint.
    #[arg(long, value_parser = existing_file)]
    pub checkpoint: PathBuf,
    /// Abstracts separated by blank lines; a leading `###id` line names one.
    #[arg(long, value_parser = existing_file)]
    pub text_file: PathBuf,
    /// Discourse checkpoint adding per-sentence label distributions.
    #[arg(long, value_parser = existing_file)]
    pub discourse_checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, value_parser = existing_file)]
    pub claim_model: Option<PathBuf>,
    #[arg(long, value_parser = existing_file)]
    pub discourse_model: Option<PathBuf>,
    /// Annotation tasks (JSON lines).
    #[arg(long, value_parser = existing_file)]
    pub tasks: Option<PathBuf>,
    /// Append-only submission log; defaults to `<out-dir>/annotations.jsonl`.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Request body limit in bytes.
    #[arg(long, default_value_t = claimx_service::DEFAULT_BODY_LIMIT)]
    pub body_limit: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Claim corpus (JSON lines).
    #[arg(long, value_parser = existing_file)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VoteArgs {
    /// Claim corpus with per-annotator labels.
    #[arg(long, value_parser = existing_file)]
    pub corpus: PathBuf,
    /// Abstracts with fewer annotators keep their existing gold labels.
    #[arg(long, default_value_t = 3)]
    pub min_annotators: usize,
    #[command(flatten)]
    pub common: Common,
}
