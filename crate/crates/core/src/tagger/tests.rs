use super::*;
use crate::corpus::{Abstract, LabeledAbstract, LabeledCorpus};
use crate::synthetic::{discourse_corpus, marker_corpus};
use crate::Error;

fn small(use_crf: bool) -> TaggerConfig {
    TaggerConfig {
        embedding_dim: 12,
        word_hidden: 12,
        ff_hidden: 12,
        use_crf,
        dropout: 0.1,
        batch_size: 8,
        ..TaggerConfig::default()
    }
}

fn quick(max_epochs: usize) -> TrainConfig {
    TrainConfig {
        lr: 0.01,
        max_epochs,
        early_stop_patience: max_epochs,
        ..TrainConfig::default()
    }
}

#[test]
fn separable_discourse_reaches_high_accuracy() {
    let train = discourse_corpus(40, 3, 1);
    let val = discourse_corpus(16, 3, 2);
    let (model, log) = pretrain_discourse(&train, &val, small(false), &quick(30), None).unwrap();
    let best = log.best_val_f1().unwrap();
    assert!(best >= 0.95, "accuracy {best}");
    let enc = model.encode_corpus(&val).unwrap();
    let (_, acc) = evaluate_encoded(&model, &enc).unwrap();
    assert!(acc >= 0.95, "restored model accuracy {acc}");
}

#[test]
fn same_seed_same_curve() {
    let train = marker_corpus(8, 3);
    let val = marker_corpus(4, 4);
    let run = || train_scratch(&train, &val, small(true), &quick(3), None).unwrap().1;
    assert_eq!(run(), run());
}

#[test]
fn crf_learns_section_order() {
    let train = discourse_corpus(40, 3, 7);
    let val = discourse_corpus(10, 3, 8);
    let (model, _) = pretrain_discourse(&train, &val, small(true), &quick(12), None).unwrap();
    let p = model.crf().unwrap().params(&model.store);
    let id = |l: &str| model.labels.iter().position(|x| x == l).unwrap();
    let (m, r, c) = (id("METHODS"), id("RESULTS"), id("CONCLUSIONS"));
    assert!(
        p.transition(c, m) < p.transition(m, r),
        "A[C][M] = {} vs A[M][R] = {}",
        p.transition(c, m),
        p.transition(m, r)
    );
}

#[test]
fn freeze_then_unfreeze() {
    let pre_train = discourse_corpus(20, 3, 11);
    let (pretrained, _) = pretrain_discourse(&pre_train, &pre_train, small(true), &quick(2), None).unwrap();
    let concl = pre_train.relabel_as_claims(CONCLUSION_LABEL).unwrap();
    let plan = TransferPlan {
        frozen: quick(3),
        finetune: quick(3),
        finetune_embeddings: true,
    };
    let (model, log) = transfer_claim(&pretrained, &concl, &concl, &plan).unwrap();
    let before = pretrained.body_checksum();
    let frozen: Vec<_> = log.stage("frozen").collect();
    assert_eq!(frozen.len(), 3);
    assert!(frozen.iter().all(|r| r.body_checksum == before));
    assert!(log.stage("finetune").all(|r| r.body_checksum != before));
    assert_eq!(log.stage_starts, vec![("frozen".to_string(), 1), ("finetune".to_string(), 4)]);
    assert_ne!(model.body_checksum(), before);
    assert!(model.store.iter().all(|(_, p)| p.trainable));
}

#[test]
fn frozen_embeddings_survive_finetuning() {
    let data = discourse_corpus(10, 2, 12);
    let (pretrained, _) = pretrain_discourse(&data, &data, small(false), &quick(1), None).unwrap();
    let concl = data.relabel_as_claims(CONCLUSION_LABEL).unwrap();
    let plan = TransferPlan {
        frozen: quick(1),
        finetune: quick(2),
        finetune_embeddings: false,
    };
    let (model, _) = transfer_claim(&pretrained, &concl, &concl, &plan).unwrap();
    let emb = |m: &TaggerModel| m.store.value(m.embedding_param()).clone();
    assert_eq!(emb(&model), emb(&pretrained));
}

#[test]
fn scratch_overfits_tiny_corpus() {
    let train = marker_corpus(12, 21);
    let cfg = TaggerConfig {
        dropout: 0.0,
        ..small(false)
    };
    let (model, log) = train_scratch(&train, &LabeledCorpus::from_claims(vec![]), cfg, &quick(40), None).unwrap();
    let enc = model.encode_corpus(&train).unwrap();
    let (_, f1) = evaluate_encoded(&model, &enc).unwrap();
    assert!(f1 >= 0.95, "train F1 {f1}");
    let first = log.records[0].train_loss;
    let last = log.records.last().unwrap().train_loss;
    assert!(last < first / 10.0, "loss {first} -> {last}");
}

#[test]
fn conclusion_relabeling() {
    let corpus = LabeledCorpus {
        labels: vec!["CONCLUSIONS".into(), "METHODS".into(), "OBJECTIVE".into()],
        abstracts: vec![LabeledAbstract {
            doc: Abstract::new("a", "", vec!["x .".into(), "y .".into(), "z .".into()]),
            labels: vec![2, 1, 0],
        }],
        skipped_empty: 0,
    };
    let claims = corpus.relabel_as_claims(CONCLUSION_LABEL).unwrap();
    assert_eq!(claims.abstracts[0].labels, vec![0, 0, 1]);

    let mut no_concl = corpus.clone();
    no_concl.labels[0] = "RESULTS".into();
    let err = train_conclusion_as_claim(&no_concl, &no_concl, small(false), &quick(1), None).unwrap_err();
    assert!(matches!(err, Error::Invalid(_)));
}

#[test]
fn empty_corpus_is_rejected() {
    let empty = LabeledCorpus::from_claims(vec![]);
    assert!(train_scratch(&empty, &empty, small(false), &quick(1), None).is_err());
}

#[test]
fn prediction_is_deterministic_and_normalised() {
    let data = marker_corpus(6, 2);
    let (model, _) = train_scratch(&data, &data, small(true), &quick(2), None).unwrap();
    let doc = &data.abstracts[0].doc;
    let a = model.predict(doc).unwrap();
    assert_eq!(a, model.predict(doc).unwrap());
    for p in &a {
        assert!((p.distribution.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let claims = model.predict_claims(doc).unwrap();
    assert_eq!(claims.len(), doc.len());
}
