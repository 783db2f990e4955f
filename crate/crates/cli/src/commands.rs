use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use claimx_core::baselines::{
    DiscourseSource, LastSentence, RuleBased, RuleSet, SifClassifier, SifClassifierConfig, WordFrequencies,
};
use claimx_core::corpus::{
    corpus_stats, make_splits, majority_vote, parse_claim_corpus, parse_discourse_corpus, write_claim_corpus,
    ClaimRecord, LabeledCorpus, SplitSpec,
};
use claimx_core::eval::{
    annotator_agreement, build_comparison, evaluate_corpus, ClaimPredictor, ComparisonRow, EvalSplit,
    ReportMetadata,
};
use claimx_core::tagger::{pretrain_discourse, train_conclusion_as_claim, train_scratch, transfer_claim, TrainLog};
use claimx_core::text::split_sentences;
use claimx_core::{Abstract, TaggerModel, TransferPlan};
use claimx_service::ServiceConfig;
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::manifest::{Manifest, OutDir};

fn utf8(bytes: Vec<u8>, path: &Path) -> Result<String> {
    String::from_utf8(bytes).with_context(|| format!("{} is not valid UTF-8", path.display()))
}

fn load_claims(m: &mut Manifest, path: &Path) -> Result<Vec<ClaimRecord>> {
    let text = utf8(m.input("corpus", path)?, path)?;
    Ok(parse_claim_corpus(&text, &path.display().to_string())?)
}

fn load_discourse(m: &mut Manifest, role: &str, path: &Path) -> Result<LabeledCorpus> {
    let text = utf8(m.input(role, path)?, path)?;
    Ok(parse_discourse_corpus(&text, &path.display().to_string())?)
}

fn load_model(m: &mut Manifest, role: &str, path: &Path) -> Result<TaggerModel> {
    let bytes = m.input(role, path)?;
    TaggerModel::from_bytes(&bytes).with_context(|| format!("loading checkpoint {}", path.display()))
}

/// Seeded 50/25/25 split of a labelled claim corpus.
fn claim_splits(records: &[ClaimRecord], seed: u64) -> Result<(LabeledCorpus, LabeledCorpus, LabeledCorpus)> {
    let corpus = LabeledCorpus::from_records(records)?;
    let s = make_splits(&corpus.abstracts, SplitSpec { seed });
    log::info!(
        "split {} abstracts into {}/{}/{}",
        corpus.len(),
        s.train.len(),
        s.val.len(),
        s.test.len()
    );
    Ok((corpus.with_abstracts(s.train), corpus.with_abstracts(s.val), corpus.with_abstracts(s.test)))
}

fn empty_like(corpus: &LabeledCorpus) -> LabeledCorpus {
    corpus.with_abstracts(Vec::new())
}

fn save_model(out: &mut OutDir, model: &TaggerModel, log: &TrainLog) -> Result<()> {
    out.write("model.ckpt", model.to_bytes()?)?;
    out.write("train_log.jsonl", log.to_jsonl())?;
    let summary = json!({
        "labels": model.labels,
        "epochs": log.records.len(),
        "best_val_score": log.best_val_f1(),
    });
    out.write("summary.json", serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}

pub fn pretrain(a: PretrainArgs) -> Result<()> {
    let seed = a.common.seed;
    let config = a.model.tagger_config(seed);
    let train_cfg = a.optim.train_config(seed);
    let mut m = Manifest::new("pretrain", &json!({"tagger": config, "train": train_cfg}), seed)?;
    let train = load_discourse(&mut m, "corpus", &a.corpus)?;
    let val = match &a.val {
        Some(p) => load_discourse(&mut m, "val", p)?,
        None => empty_like(&train),
    };
    m.input_opt("embeddings", a.model.embeddings())?;
    log::info!("pretraining on {} abstracts with labels {:?}", train.len(), train.labels);
    let (model, log) = pretrain_discourse(&train, &val, config, &train_cfg, a.model.embeddings())?;
    let mut out = OutDir::create(&a.common.out_dir, m)?;
    save_model(&mut out, &model, &log)?;
    out.finish()
}

pub fn transfer(a: TransferArgs) -> Result<()> {
    let seed = a.common.seed;
    let finetune = a.optim.train_config(seed);
    let plan = TransferPlan {
        frozen: claimx_core::TrainConfig {
            max_epochs: a.frozen_epochs,
            ..finetune.clone()
        },
        finetune,
        finetune_embeddings: !a.freeze_embeddings,
    };
    let mut m = Manifest::new("transfer", &plan, seed)?;
    let pretrained = load_model(&mut m, "pretrained", &a.pretrained)?;
    let records = load_claims(&mut m, &a.corpus)?;
    let (train, val, _) = claim_splits(&records, seed)?;
    let (model, log) = transfer_claim(&pretrained, &train, &val, &plan)?;
    let mut out = OutDir::create(&a.common.out_dir, m)?;
    save_model(&mut out, &model, &log)?;
    out.finish()
}

pub fn train(a: TrainArgs) -> Result<()> {
    let seed = a.common.seed;
    let config = a.model.tagger_config(seed);
    let train_cfg = a.optim.train_config(seed);
    let mut m = Manifest::new(
        "train",
        &json!({"regime": a.regime, "tagger": config, "train": train_cfg}),
        seed,
    )?;
    let emb = a.model.embeddings();
    let (model, log) = match a.regime {
        Regime::Scratch => {
            let records = load_claims(&mut m, &a.corpus)?;
            m.input_opt("embeddings", emb)?;
            let (train, val, _) = claim_splits(&records, seed)?;
            train_scratch(&train, &val, config, &train_cfg, emb)?
        }
        Regime::ConclusionAsClaim => {
            let corpus = load_discourse(&mut m, "corpus", &a.corpus)?;
            m.input_opt("embeddings", emb)?;
            train_conclusion_as_claim(&corpus, &empty_like(&corpus), config, &train_cfg, emb)?
        }
    };
    let mut out = OutDir::create(&a.common.out_dir, m)?;
    save_model(&mut out, &model, &log)?;
    out.finish()
}

#[derive(Serialize)]
struct EvalConfig {
    model: ModelKind,
    split: EvalSplit,
    seed: u64,
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let seed = a.common.seed;
    let mut m = Manifest::new(
        "eval",
        &EvalConfig {
            model: a.model,
            split: a.split,
            seed,
        },
        seed,
    )?;
    let records = load_claims(&mut m, &a.corpus)?;
    let dataset_hash = m.inputs["corpus"].sha256.clone();
    let (train, val, test) = claim_splits(&records, seed)?;
    let target = match a.split {
        EvalSplit::Train => &train,
        EvalSplit::Validation => &val,
        EvalSplit::Test => &test,
    };

    let predictor: Box<dyn ClaimPredictor> = match a.model {
        ModelKind::LastSentence => Box::new(LastSentence),
        ModelKind::RuleBased => {
            let rules = match &a.rules {
                Some(p) => {
                    let text = utf8(m.input("rules", p)?, p)?;
                    RuleSet::parse(&text, &p.display().to_string())?
                }
                None => RuleSet::default_rules(),
            };
            Box::new(RuleBased { rules })
        }
        ModelKind::Sif | ModelKind::SifDiscourse => {
            let discourse: Option<Box<dyn DiscourseSource>> = if a.model == ModelKind::SifDiscourse {
                let Some(p) = &a.discourse_checkpoint else {
                    bail!("--model sif-discourse needs --discourse-checkpoint");
                };
                Some(Box::new(load_model(&mut m, "discourse_checkpoint", p)?))
            } else {
                None
            };
            m.input_opt("embeddings", a.embeddings.as_deref())?;
            let freqs = match &a.freqs {
                Some(p) => {
                    let bytes = m.input("freqs", p)?;
                    Some(WordFrequencies::parse(bytes.as_slice(), &p.display().to_string())?)
                }
                None => None,
            };
            let cfg = SifClassifierConfig {
                seed,
                ..SifClassifierConfig::default()
            };
            Box::new(SifClassifier::fit(&train, a.embeddings.as_deref(), freqs, discourse, cfg)?)
        }
        ModelKind::Tagger => {
            let Some(p) = &a.checkpoint else {
                bail!("--model tagger needs --checkpoint");
            };
            let model = load_model(&mut m, "checkpoint", p)?;
            if model.labels.len() != 2 {
                bail!("{} is not a claim checkpoint (labels {:?})", p.display(), model.labels);
            }
            Box::new(model)
        }
    };

    let evaluation = evaluate_corpus(predictor.as_ref(), target)?;
    let report = build_comparison(
        vec![ComparisonRow::new(predictor.name(), a.split, &evaluation.metrics)],
        ReportMetadata {
            seed,
            dataset_hash,
            config_hash: m.config_hash(),
        },
    )?;
    let text = report.render_text();
    print!("{text}");
    let mut out = OutDir::create(&a.common.out_dir, m)?;
    out.write("report.txt", &text)?;
    out.write("report.jsonl", report.render_jsonl())?;
    out.write("evaluation.json", serde_json::to_string_pretty(&evaluation)? + "\n")?;
    out.finish()
}

/// Splits a text file into abstracts at blank lines. A first line of the
/// form `###id` names the abstract; others are numbered from 1.
pub fn parse_text_abstracts(text: &str) -> Vec<Abstract> {
    let mut blocks: Vec<Vec<&str>> = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                blocks.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(line);
        }
    }
    if !cur.is_empty() {
        blocks.push(cur);
    }
    blocks
        .into_iter()
        .enumerate()
        .filter_map(|(i, lines)| {
            let (id, body) = match lines[0].trim().strip_prefix("###") {
                Some(id) => (id.trim().to_string(), &lines[1..]),
                None => (format!("abstract-{}", i + 1), &lines[..]),
            };
            let sentences: Vec<String> = split_sentences(&body.join(" ")).into_iter().map(|s| s.text).collect();
            (!sentences.is_empty()).then(|| Abstract::new(id, "", sentences))
        })
        .collect()
}

#[derive(Serialize)]
struct PredictionRecord<'a> {
    abstract_id: &'a str,
    index: usize,
    text: &'a str,
    claim_prob: f64,
    claim: bool,
    discourse_dist: Option<BTreeMap<&'a str, f64>>,
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let seed = a.common.seed;
    let mut m = Manifest::new("predict", &json!({}), seed)?;
    let claim = load_model(&mut m, "checkpoint", &a.checkpoint)?;
    if claim.labels.len() != 2 {
        bail!("{} is not a claim checkpoint (labels {:?})", a.checkpoint.display(), claim.labels);
    }
    let discourse = match &a.discourse_checkpoint {
        Some(p) => Some(load_model(&mut m, "discourse_checkpoint", p)?),
        None => None,
    };
    let text = utf8(m.input("text_file", &a.text_file)?, &a.text_file)?;
    let docs = parse_text_abstracts(&text);
    log::info!("predicting {} abstracts", docs.len());
    let mut lines = String::new();
    for doc in &docs {
        let claims = claim.predict_claims(doc)?;
        let dists = match &discourse {
            Some(d) => Some(d.predict(doc)?),
            None => None,
        };
        for (i, (sentence, (claim_prob, is_claim))) in doc.sentences.iter().zip(claims).enumerate() {
            let rec = PredictionRecord {
                abstract_id: &doc.id,
                index: i,
                text: sentence,
                claim_prob,
                claim: is_claim,
                discourse_dist: match (&discourse, &dists) {
                    (Some(d), Some(p)) => Some(
                        d.labels
                            .iter()
                            .map(String::as_str)
                            .zip(p[i].distribution.iter().copied())
                            .collect(),
                    ),
                    _ => None,
                },
            };
            lines.push_str(&serde_json::to_string(&rec)?);
            lines.push('\n');
        }
    }
    let mut out = OutDir::create(&a.common.out_dir, m)?;
    out.write("predictions.jsonl", lines)?;
    out.finish()
}

pub fn serve(a: ServeArgs) -> Result<()> {
    let store = a.store.clone().unwrap_or_else(|| a.common.out_dir.join("annotations.jsonl"));
    let config = ServiceConfig {
        addr: a.addr,
        claim_model: a.claim_model.clone(),
        discourse_model: a.discourse_model.clone(),
        tasks: a.tasks.clone(),
        store,
        body_limit: a.body_limit,
    };
    let mut m = Manifest::new(
        "serve",
        &json!({"addr": a.addr.to_string(), "store": config.store, "body_limit": a.body_limit}),
        a.common.seed,
    )?;
    m.input_opt("claim_model", a.claim_model.as_deref())?;
    m.input_opt("discourse_model", a.discourse_model.as_deref())?;
    m.input_opt("tasks", a.tasks.as_deref())?;
    OutDir::create(&a.common.out_dir, m)?.finish()?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(claimx_service::serve(config))?;
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<()> {
    let mut m = Manifest::new("stats", &json!({}), a.common.seed)?;
    let records = load_claims(&mut m, &a.corpus)?;
    let corpus = LabeledCorpus::from_records(&records)?;
    let flags = corpus.claim_flags();
    let stats = corpus_stats(flags.iter().map(Vec::as_slice));
    let text = stats.render();
    print!("{text}");
    let mut out = OutDir::create(&a.common.out_dir, m)?;
    out.write("stats.txt", &text)?;
    out.write("stats.json", serde_json::to_string_pretty(&stats)? + "\n")?;
    out.finish()
}

pub fn vote(a: VoteArgs) -> Result<()> {
    let mut m = Manifest::new("vote", &json!({"min_annotators": a.min_annotators}), a.common.seed)?;
    let mut records = load_claims(&mut m, &a.corpus)?;
    let mut voted = 0;
    let mut ties = 0;
    for r in &mut records {
        if r.annotations.len() >= a.min_annotators.max(1) {
            let outcome = majority_vote(&r.annotations)?;
            ties += outcome.ties.len();
            r.gold_labels = Some(outcome.labels);
            voted += 1;
        }
    }
    let agreement = annotator_agreement(&records)?;
    let text = format!(
        "abstracts: {}\nvoted: {voted}\ntied sentences: {ties}\n{}",
        records.len(),
        agreement.render()
    );
    print!("{text}");
    let mut out = OutDir::create(&a.common.out_dir, m)?;
    out.write("gold.jsonl", write_claim_corpus(&records))?;
    out.write("agreement.txt", &text)?;
    out.write("agreement.json", serde_json::to_string_pretty(&agreement)? + "\n")?;
    out.finish()
}
