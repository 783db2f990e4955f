//! Claim extraction for scientific abstracts.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense tensors, a reverse-mode tape, LSTM cells, Adam,
//!   plateau scheduling and the checkpoint format.
//! * [`text`]: sentence splitting, tokenisation, vocabularies and
//!   word-embedding loading.
//! * [`corpus`]: discourse-labelled and claim-annotated abstracts, majority
//!   voting, splits and corpus statistics.
//! * [`crf`]: exact linear-chain CRF inference and its training loss.
//! * [`tagger`]: the hierarchical Bi-LSTM (CRF) sentence tagger with
//!   discourse pretraining, head replacement and staged fine-tuning.
//! * [`baselines`]: rule-based, last-sentence and SIF + logistic regression
//!   claim detectors.
//! * [`eval`]: precision/recall/F1, Cohen's and Fleiss' kappa and
//!   comparison reports.
//! * [`synthetic`]: seeded toy corpora with known structure, used by tests,
//!   benches and the CLI demo paths.

pub mod baselines;
pub mod corpus;
pub mod crf;
mod error;
#[cfg(test)]
mod testutil;
pub mod eval;
pub mod synthetic;
pub mod tagger;
pub mod tensor;
pub mod text;

pub use error::{Error, Result};

pub use corpus::{Abstract, AnnotationRecord, ClaimRecord, DiscourseCorpus, LabeledAbstract};
pub use tagger::{TaggerConfig, TaggerModel, TrainConfig, TransferPlan};
pub use tensor::{ParamStore, Tensor};
