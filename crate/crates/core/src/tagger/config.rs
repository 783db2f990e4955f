use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Concatenated final forward and final backward word states.
    FinalStates,
    /// Mean of the per-token Bi-LSTM outputs.
    Mean,
}

/// Architecture hyperparameters. Stored in checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub embedding_dim: usize,
    pub word_hidden: usize,
    pub pooling: Pooling,
    pub ff_hidden: usize,
    pub num_labels: usize,
    pub use_crf: bool,
    /// Learn CRF start/end scores; when false they stay frozen at zero.
    pub crf_boundary_scores: bool,
    /// Feed row-wise log-softmax of the logits to the CRF instead of the
    /// raw logits.
    pub crf_on_log_probs: bool,
    /// Hidden size of an optional Bi-LSTM over sentence vectors.
    pub sentence_hidden: Option<usize>,
    pub dropout: f64,
    /// Abstracts per optimizer step.
    pub batch_size: usize,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            embedding_dim: 300,
            word_hidden: 128,
            pooling: Pooling::FinalStates,
            ff_hidden: 128,
            num_labels: 5,
            use_crf: true,
            crf_boundary_scores: true,
            crf_on_log_probs: false,
            sentence_hidden: None,
            dropout: 0.25,
            batch_size: 64,
            min_count: 1,
            seed: 13,
        }
    }
}

impl TaggerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::Invalid(format!("tagger config: {m}")));
        if self.embedding_dim == 0 || self.word_hidden == 0 || self.ff_hidden == 0 {
            return bad("dimensions must be positive");
        }
        if self.sentence_hidden == Some(0) {
            return bad("sentence_hidden must be positive");
        }
        if self.num_labels < 2 {
            return bad("at least two labels are required");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size == 0 || self.min_count == 0 {
            return bad("batch_size and min_count must be at least 1");
        }
        Ok(())
    }

    pub fn sentence_dim(&self) -> usize {
        match self.sentence_hidden {
            Some(h) => 2 * h,
            None => 2 * self.word_hidden,
        }
    }
}

/// Optimisation settings for one training stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub lr_factor: f64,
    pub scheduler_patience: usize,
    pub min_lr: f64,
    pub max_epochs: usize,
    /// Stop after this many epochs without a validation-loss improvement.
    pub early_stop_patience: usize,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            lr_factor: 0.5,
            scheduler_patience: 2,
            min_lr: 1e-6,
            max_epochs: 30,
            early_stop_patience: 5,
            grad_clip: 5.0,
            seed: 13,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.lr > 0.0) || self.max_epochs == 0 {
            return Err(crate::Error::Invalid("train config: lr must be > 0 and max_epochs >= 1".into()));
        }
        Ok(())
    }
}

/// Two-stage transfer: head only with the pretrained body frozen, then
/// everything.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferPlan {
    pub frozen: TrainConfig,
    pub finetune: TrainConfig,
    /// Whether word embeddings are updated during fine-tuning.
    pub finetune_embeddings: bool,
}

impl Default for TransferPlan {
    fn default() -> Self {
        TransferPlan {
            frozen: TrainConfig::default(),
            finetune: TrainConfig::default(),
            finetune_embeddings: true,
        }
    }
}
