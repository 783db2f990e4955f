use std::hint::black_box;

use claimx_core::baselines::{sif_embed, SifConfig, WordFrequencies};
use claimx_core::crf::{log_partition, marginals, viterbi_decode, CrfParams};
use claimx_core::synthetic::{discourse_corpus, marker_corpus};
use claimx_core::tagger::{build_model, TaggerConfig};
use claimx_core::text::{tokenize, EmbeddingTable, Vocabulary};
use claimx_core::Tensor;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_crf(t: usize, k: usize, seed: u64) -> (Tensor, CrfParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
    let e = Tensor::matrix(t, k, draw(t * k)).unwrap();
    let p = CrfParams {
        k,
        transitions: draw(k * k),
        start: draw(k),
        end: draw(k),
    };
    (e, p)
}

fn crf(c: &mut Criterion) {
    let mut group = c.benchmark_group("crf");
    for &(t, k) in &[(10, 5), (30, 5), (30, 2)] {
        let (e, p) = random_crf(t, k, 1);
        let id = format!("T{t}xK{k}");
        group.bench_with_input(BenchmarkId::new("log_partition", &id), &(), |b, _| {
            b.iter(|| log_partition(black_box(&e), &p))
        });
        group.bench_with_input(BenchmarkId::new("marginals", &id), &(), |b, _| b.iter(|| marginals(black_box(&e), &p)));
        group.bench_with_input(BenchmarkId::new("viterbi", &id), &(), |b, _| {
            b.iter(|| viterbi_decode(black_box(&e), &p))
        });
    }
    group.finish();
}

fn tagger(c: &mut Criterion) {
    let corpus = discourse_corpus(8, 6, 3);
    let mut group = c.benchmark_group("tagger");
    for (name, use_crf) in [("predict_crf", true), ("predict_softmax", false)] {
        let cfg = TaggerConfig {
            embedding_dim: 50,
            word_hidden: 32,
            ff_hidden: 32,
            use_crf,
            ..TaggerConfig::default()
        };
        let model = build_model(&corpus, cfg, None).unwrap();
        let doc = &corpus.abstracts[0].doc;
        group.bench_function(name, |b| b.iter(|| model.predict(black_box(doc)).unwrap()));
    }
    group.finish();
}

fn sif(c: &mut Criterion) {
    let corpus = marker_corpus(50, 4);
    let sentences: Vec<Vec<String>> = corpus
        .abstracts
        .iter()
        .flat_map(|a| a.doc.sentences.iter().map(|s| tokenize(s)))
        .collect();
    let vocab = Vocabulary::build(sentences.iter().map(|s| s.as_slice()), 1);
    let table = EmbeddingTable::random(vocab.len(), 100, 7);
    let freqs = WordFrequencies::from_vocab(&vocab);
    let cfg = SifConfig::default();
    c.bench_function("sif/embed_all_sentences", |b| {
        b.iter(|| {
            for s in &sentences {
                black_box(sif_embed(s, &vocab, &table, &freqs, &cfg));
            }
        })
    });
}

criterion_group!(benches, crf, tagger, sif);
criterion_main!(benches);
