use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use claimx_core::corpus::{majority_vote, parse_claim_corpus, write_claim_corpus, write_discourse_corpus};
use claimx_core::synthetic::{discourse_corpus, marker_corpus, CLAIM_MARKER};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/claims_small.jsonl");

const TINY: &[&str] = &[
    "--embedding-dim",
    "8",
    "--word-hidden",
    "8",
    "--ff-hidden",
    "8",
    "--batch-size",
    "8",
    "--dropout",
    "0",
    "--lr",
    "0.01",
    "--epochs",
    "3",
];

fn claimx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_claimx"))
        .args(args)
        .env("CLAIMX_LOG", "warn")
        .output()
        .expect("run claimx")
}

fn ok(args: &[&str]) -> Output {
    let out = claimx(args);
    assert!(
        out.status.success(),
        "claimx {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_marker_claims(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("claims.jsonl");
    fs::write(&path, write_claim_corpus(&marker_corpus(n, 3).to_claim_records())).unwrap();
    path
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_two() {
    let out = claimx(&["stats", "--corpus", FIXTURE, "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    assert_eq!(claimx(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(claimx(&["stats", "--corpus", "/no/such/file.jsonl"]).status.code(), Some(2));
    assert_eq!(claimx(&["eval", "--model", "tagger", "--corpus", FIXTURE]).status.code(), Some(2));
    // transfer never falls back to scratch training
    let out = claimx(&["transfer", "--corpus", FIXTURE]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--pretrained"));
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\": \"x\"}\n").unwrap();
    let out = claimx(&["stats", "--corpus", s(&bad), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.jsonl:1"), "{err}");
}

#[test]
fn stats_on_fixture_and_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["stats", "--corpus", FIXTURE, "--out-dir", s(dir.path())]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("abstracts: 2\nsentences: 5\nclaims: 2\nclaims in last sentence: 1 (50.0%)\n"));
    let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["claims"], 2);

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = ok(&["stats", "--corpus", s(&empty), "--out-dir", s(&dir.path().join("e"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("abstracts: 0\nsentences: 0\nclaims: 0\n"));
}

#[test]
fn eval_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_marker_claims(dir.path(), 20);
    let before = fs::read(&corpus).unwrap();
    for model in ["last-sentence", "rule-based", "sif"] {
        let run = |name: &str| {
            let out = dir.path().join(format!("{model}-{name}"));
            ok(&[
                "eval", "--model", model, "--corpus", s(&corpus), "--split", "test", "--seed", "7", "--out-dir",
                s(&out),
            ]);
            out
        };
        let (a, b) = (run("a"), run("b"));
        for f in ["report.txt", "report.jsonl", "evaluation.json", "manifest.json"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{model} {f}");
        }
        let report = fs::read_to_string(a.join("report.txt")).unwrap();
        assert!(report.contains(&format!("{model}  ")) || report.contains(model), "{report}");
        assert!(report.contains("seed: 7"), "{report}");
        let m = manifest(&a);
        assert_eq!(m["command"], "eval");
        assert_eq!(m["seed"], 7);
        assert_eq!(m["config"]["model"], model);
        assert_eq!(m["inputs"]["corpus"]["sha256"].as_str().unwrap().len(), 64);
    }
    assert_eq!(fs::read(&corpus).unwrap(), before, "input corpus was modified");
}

#[test]
fn vote_fills_gold_from_majority() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["vote", "--corpus", FIXTURE, "--out-dir", s(dir.path())]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("fleiss kappa:"), "{text}");
    let gold = parse_claim_corpus(&fs::read_to_string(dir.path().join("gold.jsonl")).unwrap(), "gold").unwrap();
    let input = parse_claim_corpus(&fs::read_to_string(FIXTURE).unwrap(), "fixture").unwrap();
    assert_eq!(gold.len(), 2);
    for (g, r) in gold.iter().zip(&input) {
        assert_eq!(g.gold_labels, Some(majority_vote(&r.annotations).unwrap().labels));
        assert_eq!(g.annotations, r.annotations);
    }
    assert_eq!(gold[0].gold_labels, Some(vec![false, true]));
    assert_eq!(gold[1].gold_labels, Some(vec![false, true, false]));
}

#[test]
fn train_predict_and_eval_tagger() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_marker_claims(dir.path(), 16);
    let run = dir.path().join("train");
    let mut args = vec!["train", "--corpus", s(&corpus), "--out-dir", s(&run)];
    args.extend_from_slice(TINY);
    ok(&args);
    for f in ["model.ckpt", "train_log.jsonl", "summary.json", "manifest.json"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let m = manifest(&run);
    assert_eq!(m["config"]["tagger"]["embedding_dim"], 8);
    assert_eq!(m["config"]["regime"], "scratch");

    let text = dir.path().join("abs.txt");
    fs::write(
        &text,
        format!("###p1\nAlpha beta gamma. Delta {CLAIM_MARKER} epsilon.\n\nOne two three. Four five.\nSix seven.\n"),
    )
    .unwrap();
    let ckpt = run.join("model.ckpt");
    let pred_dir = dir.path().join("pred");
    ok(&["predict", "--checkpoint", s(&ckpt), "--text-file", s(&text), "--out-dir", s(&pred_dir)]);
    let lines: Vec<serde_json::Value> = fs::read_to_string(pred_dir.join("predictions.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 5);
    let ids: Vec<(&str, u64)> = lines
        .iter()
        .map(|l| (l["abstract_id"].as_str().unwrap(), l["index"].as_u64().unwrap()))
        .collect();
    assert_eq!(ids, vec![("p1", 0), ("p1", 1), ("abstract-2", 0), ("abstract-2", 1), ("abstract-2", 2)]);
    for l in &lines {
        let p = l["claim_prob"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(l["claim"].is_boolean());
        assert!(l["discourse_dist"].is_null());
        assert!(l["text"].is_string());
    }
    let again = dir.path().join("pred2");
    ok(&["predict", "--checkpoint", s(&ckpt), "--text-file", s(&text), "--out-dir", s(&again)]);
    assert_eq!(
        fs::read(pred_dir.join("predictions.jsonl")).unwrap(),
        fs::read(again.join("predictions.jsonl")).unwrap()
    );

    let ev = dir.path().join("eval");
    let out = ok(&[
        "eval", "--model", "tagger", "--checkpoint", s(&ckpt), "--corpus", s(&corpus), "--split", "val",
        "--out-dir", s(&ev),
    ]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("validation"));
}

#[test]
fn pretrain_then_transfer_with_discourse_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let discourse = dir.path().join("rct.txt");
    fs::write(&discourse, write_discourse_corpus(&discourse_corpus(12, 4, 2))).unwrap();
    let pre = dir.path().join("pre");
    let mut args = vec!["pretrain", "--corpus", s(&discourse), "--out-dir", s(&pre)];
    args.extend_from_slice(TINY);
    ok(&args);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(pre.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["labels"].as_array().unwrap().len(), 4);

    let claims = write_marker_claims(dir.path(), 12);
    let tr = dir.path().join("transfer");
    let ckpt = pre.join("model.ckpt");
    ok(&[
        "transfer", "--pretrained", s(&ckpt), "--corpus", s(&claims), "--frozen-epochs", "2", "--epochs", "2",
        "--lr", "0.01", "--out-dir", s(&tr),
    ]);
    let log = fs::read_to_string(tr.join("train_log.jsonl")).unwrap();
    let stages: Vec<String> = log
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["stage"].as_str().unwrap().to_string())
        .collect();
    assert!(stages.iter().any(|s| s == "frozen") && stages.iter().any(|s| s == "finetune"), "{stages:?}");
    assert!(manifest(&tr)["inputs"]["pretrained"]["sha256"].is_string());

    let text = dir.path().join("abs.txt");
    fs::write(&text, "First sentence here. Second one follows.\n").unwrap();
    let pred = dir.path().join("pred");
    ok(&[
        "predict",
        "--checkpoint",
        s(&tr.join("model.ckpt")),
        "--discourse-checkpoint",
        s(&ckpt),
        "--text-file",
        s(&text),
        "--out-dir",
        s(&pred),
    ]);
    for line in fs::read_to_string(pred.join("predictions.jsonl")).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let dist = v["discourse_dist"].as_object().unwrap();
        assert_eq!(dist.len(), 4);
        let total: f64 = dist.values().map(|x| x.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    // a discourse checkpoint is not a claim model
    let out = claimx(&["predict", "--checkpoint", s(&ckpt), "--text-file", s(&text), "--out-dir", s(&pred)]);
    assert_eq!(out.status.code(), Some(1));
}
