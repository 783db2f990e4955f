use std::path::Path;

use super::model::TaggerModel;
use super::train::{fit, TrainLog};
use super::{TaggerConfig, TrainConfig, TransferPlan};
use crate::corpus::{LabeledCorpus, CLAIM_LABELS};
use crate::text::{load_embeddings, tokenize, Vocabulary};
use crate::{Error, Result};

/// Discourse label relabelled as "claim" by the conclusion-as-claim regime.
pub const CONCLUSION_LABEL: &str = "CONCLUSIONS";

fn check_corpus(corpus: &LabeledCorpus, what: &str) -> Result<()> {
    if corpus.is_empty() || corpus.sentence_count() == 0 {
        return Err(Error::Invalid(format!("{what} corpus is empty")));
    }
    Ok(())
}

fn check_binary(corpus: &LabeledCorpus) -> Result<()> {
    if corpus.labels.len() != 2 {
        return Err(Error::Invalid(format!(
            "claim training needs exactly two labels, corpus has {:?}",
            corpus.labels
        )));
    }
    Ok(())
}

/// Builds a fresh model whose vocabulary comes from `train`, with word
/// vectors from `embeddings` when given. The file's vector size overrides
/// `config.embedding_dim`.
pub fn build_model(train: &LabeledCorpus, mut config: TaggerConfig, embeddings: Option<&Path>) -> Result<TaggerModel> {
    let sentences: Vec<Vec<String>> = train
        .abstracts
        .iter()
        .flat_map(|a| a.doc.sentences.iter().map(|s| tokenize(s)))
        .collect();
    let vocab = Vocabulary::build(sentences.iter().map(|s| s.as_slice()), config.min_count);
    config.num_labels = train.labels.len();
    let table = match embeddings {
        Some(path) => {
            let t = load_embeddings(path, &vocab, config.seed)?;
            log::info!(
                "embeddings {}: dim {}, coverage {:.1}%",
                path.display(),
                t.dim,
                100.0 * t.coverage
            );
            config.embedding_dim = t.dim;
            Some(t)
        }
        None => None,
    };
    TaggerModel::new(config, train.labels.clone(), vocab, table.as_ref())
}

fn train_fresh(
    train: &LabeledCorpus,
    val: &LabeledCorpus,
    config: TaggerConfig,
    train_cfg: &TrainConfig,
    embeddings: Option<&Path>,
    stage: &str,
) -> Result<(TaggerModel, TrainLog)> {
    check_corpus(train, "training")?;
    let mut model = build_model(train, config, embeddings)?;
    let tr = model.encode_corpus(train)?;
    let va = model.encode_corpus(val)?;
    let mut log = TrainLog::default();
    fit(&mut model, &tr, &va, train_cfg, stage, &mut log)?;
    Ok((model, log))
}

/// Trains a discourse tagger over the corpus' own label set.
pub fn pretrain_discourse(
    train: &LabeledCorpus,
    val: &LabeledCorpus,
    config: TaggerConfig,
    train_cfg: &TrainConfig,
    embeddings: Option<&Path>,
) -> Result<(TaggerModel, TrainLog)> {
    train_fresh(train, val, config, train_cfg, embeddings, "pretrain")
}

/// Claim tagger trained only on claim annotations.
pub fn train_scratch(
    train: &LabeledCorpus,
    val: &LabeledCorpus,
    config: TaggerConfig,
    train_cfg: &TrainConfig,
    embeddings: Option<&Path>,
) -> Result<(TaggerModel, TrainLog)> {
    check_binary(train)?;
    train_fresh(train, val, config, train_cfg, embeddings, "scratch")
}

/// Claim tagger trained on discourse data with conclusion sentences taken
/// as claims.
pub fn train_conclusion_as_claim(
    train: &LabeledCorpus,
    val: &LabeledCorpus,
    config: TaggerConfig,
    train_cfg: &TrainConfig,
    embeddings: Option<&Path>,
) -> Result<(TaggerModel, TrainLog)> {
    let tr = train.relabel_as_claims(CONCLUSION_LABEL)?;
    let va = if val.is_empty() {
        LabeledCorpus::from_claims(std::iter::empty())
    } else {
        val.relabel_as_claims(CONCLUSION_LABEL)?
    };
    train_scratch(&tr, &va, config, train_cfg, embeddings)
}

/// Replaces the pretrained head with a binary claim head, trains it with
/// the body frozen, then unfreezes everything and fine-tunes. The log holds
/// a `frozen` stage followed by a `finetune` stage.
pub fn transfer_claim(
    pretrained: &TaggerModel,
    train: &LabeledCorpus,
    val: &LabeledCorpus,
    plan: &TransferPlan,
) -> Result<(TaggerModel, TrainLog)> {
    check_corpus(train, "claim")?;
    check_binary(train)?;
    let mut model = pretrained.with_new_head(train.labels.clone(), plan.frozen.seed)?;
    let tr = model.encode_corpus(train)?;
    let va = model.encode_corpus(val)?;
    let mut log = TrainLog::default();

    model.freeze_body(true);
    fit(&mut model, &tr, &va, &plan.frozen, "frozen", &mut log)?;

    model.freeze_body(false);
    model.set_embeddings_trainable(plan.finetune_embeddings);
    fit(&mut model, &tr, &va, &plan.finetune, "finetune", &mut log)?;
    model.freeze_body(false);
    Ok((model, log))
}

/// Label names expected by the claim regimes.
pub fn claim_labels() -> Vec<String> {
    CLAIM_LABELS.iter().map(|s| s.to_string()).collect()
}
