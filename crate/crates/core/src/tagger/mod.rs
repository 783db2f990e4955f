//! Hierarchical sentence tagger.
//!
//! Each sentence is embedded word by word, encoded with a word-level
//! Bi-LSTM, pooled to a vector and mapped by a one-hidden-layer feedforward
//! network to `K` label scores. Optionally a linear-chain CRF ties the
//! sentence labels of an abstract together.
//!
//! Training regimes:
//!
//! * [`pretrain_discourse`]: K-way discourse tagging on structured abstracts.
//! * [`transfer_claim`]: replace the feedforward head (and CRF) with a
//!   fresh binary one, train it with the body frozen, then fine-tune everything.
//! * [`train_scratch`]: the same architecture trained only on claim data.
//! * [`train_conclusion_as_claim`]: discourse data relabelled so that
//!   conclusion sentences are claims.

mod config;
mod model;
mod predict;
mod regimes;
mod train;

pub use config::{Pooling, TaggerConfig, TrainConfig, TransferPlan};
pub use model::{EncodedAbstract, TaggerMetadata, TaggerModel, HEAD_PREFIXES};
pub use predict::{SentencePrediction, CLAIM_THRESHOLD};
pub use regimes::{
    build_model, claim_labels, pretrain_discourse, train_conclusion_as_claim, train_scratch, transfer_claim,
    CONCLUSION_LABEL,
};
pub use train::{evaluate_encoded, fit, EpochRecord, FitSummary, TrainLog};

#[cfg(test)]
mod tests;
