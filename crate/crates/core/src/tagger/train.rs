use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{EncodedAbstract, TaggerModel};
use super::TrainConfig;
use crate::crf::{log_partition, sequence_score};
use crate::eval::BinaryCounts;
use crate::tensor::{clip_grad_norm, logsumexp, Adam, AdamConfig, Graph, PlateauScheduler};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based, counted across all stages of one log.
    pub epoch: usize,
    pub stage: String,
    pub lr: f64,
    /// Mean per-sentence training loss (dropout active).
    pub train_loss: f64,
    pub val_loss: f64,
    /// Claim F1 for binary models, accuracy otherwise.
    pub val_f1: f64,
    #[serde(skip)]
    pub body_checksum: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    /// `(stage, first epoch of that stage)` in order.
    pub stage_starts: Vec<(String, usize)>,
}

impl TrainLog {
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialise") + "\n")
            .collect()
    }

    pub fn stage(&self, name: &str) -> impl Iterator<Item = &EpochRecord> {
        let name = name.to_string();
        self.records.iter().filter(move |r| r.stage == name)
    }

    /// Number of epochs, counted over the listed stages in log order, until
    /// `val_f1` first reaches `threshold`.
    pub fn epochs_to_reach(&self, threshold: f64, stages: &[&str]) -> Option<usize> {
        self.records
            .iter()
            .filter(|r| stages.contains(&r.stage.as_str()))
            .position(|r| r.val_f1 >= threshold)
            .map(|i| i + 1)
    }

    pub fn best_val_f1(&self) -> Option<f64> {
        self.records.iter().map(|r| r.val_f1).reduce(f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitSummary {
    pub epochs_run: usize,
    /// Epoch (within this stage, 0 = before training) whose weights were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Mean per-sentence loss and the validation score of `docs` in eval mode.
pub fn evaluate_encoded(model: &TaggerModel, docs: &[EncodedAbstract]) -> Result<(f64, f64)> {
    let k = model.num_labels();
    let crf = model.crf().map(|c| c.params(&model.store));
    let mut loss = 0.0;
    let mut sentences = 0usize;
    let mut counts = BinaryCounts::default();
    let mut correct = 0usize;
    for doc in docs {
        let em = model.emissions(&doc.tokens)?;
        let preds = model.predict_tokens(&doc.tokens)?;
        loss += match &crf {
            Some(p) => log_partition(&em, p) - sequence_score(&em, &doc.labels, p)?,
            None => (0..em.rows()).map(|t| logsumexp(em.row(t)) - em.row(t)[doc.labels[t]]).sum(),
        };
        sentences += doc.labels.len();
        for (p, &g) in preds.iter().zip(&doc.labels) {
            correct += usize::from(p.label == g);
        }
        if k == 2 {
            let pb: Vec<bool> = preds.iter().map(|p| p.label == 1).collect();
            let gb: Vec<bool> = doc.labels.iter().map(|&l| l == 1).collect();
            counts.merge(BinaryCounts::from_pairs(&pb, &gb)?);
        }
    }
    if sentences == 0 {
        return Err(Error::Invalid("evaluation set has no sentences".into()));
    }
    let mean = loss / sentences as f64;
    if !mean.is_finite() {
        return Err(Error::Numeric { op: "validation loss" });
    }
    let score = if k == 2 {
        counts.prf1().f1
    } else {
        correct as f64 / sentences as f64
    };
    Ok((mean, score))
}

/// Trains the currently trainable parameters of `model` with Adam and a
/// plateau schedule, early-stopping on validation loss. The best weights
/// (including the untrained starting point) are restored before returning.
/// An empty `val` falls back to evaluating on `train`.
pub fn fit(
    model: &mut TaggerModel,
    train: &[EncodedAbstract],
    val: &[EncodedAbstract],
    cfg: &TrainConfig,
    stage: &str,
    log: &mut TrainLog,
) -> Result<FitSummary> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Invalid("training set is empty".into()));
    }
    let val = if val.is_empty() { train } else { val };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(&model.store, AdamConfig::default());
    let mut sched = PlateauScheduler::new(cfg.lr, cfg.lr_factor)
        .with_patience(cfg.scheduler_patience)
        .with_min_lr(cfg.min_lr);

    let (mut best_loss, _) = evaluate_encoded(model, val)?;
    let mut best_weights = model.store.snapshot();
    let mut best_epoch = 0;
    let mut since_best = 0;
    let first_epoch = log.records.len() + 1;
    log.stage_starts.push((stage.to_string(), first_epoch));

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs_run = 0;
    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        let lr = sched.current_lr;
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut total_sentences = 0usize;
        for batch in order.chunks(model.config.batch_size) {
            let n: usize = batch.iter().map(|&i| train[i].labels.len()).sum();
            model.store.zero_grad();
            for &i in batch {
                let mut g = Graph::new();
                let loss = model.loss(&mut g, &train[i], Some(&mut rng))?;
                total += g.value(loss).item();
                g.backward_scaled(loss, 1.0 / n as f64, &mut model.store)?;
            }
            total_sentences += n;
            clip_grad_norm(&mut model.store, cfg.grad_clip);
            adam.step(&mut model.store, lr)?;
        }
        let (val_loss, val_f1) = evaluate_encoded(model, val)?;
        log.records.push(EpochRecord {
            epoch: log.records.len() + 1,
            stage: stage.to_string(),
            lr,
            train_loss: total / total_sentences as f64,
            val_loss,
            val_f1,
            body_checksum: model.body_checksum(),
        });
        log::debug!("{stage} epoch {epoch}: train {:.4} val {val_loss:.4} f1 {val_f1:.3}", total / total_sentences as f64);
        sched.observe(val_loss);
        if val_loss < best_loss {
            best_loss = val_loss;
            best_weights = model.store.snapshot();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                break;
            }
        }
    }
    model.store.restore(&best_weights);
    Ok(FitSummary {
        epochs_run,
        best_epoch,
        best_val_loss: best_loss,
    })
}
