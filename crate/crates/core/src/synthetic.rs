//! Seeded toy corpora whose labels follow known rules.
//!
//! Every generator is a pure function of its seed, so tests and benchmarks
//! can rebuild the same data on demand.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Abstract, LabeledAbstract, LabeledCorpus};

/// Token that makes a sentence a claim in [`marker_corpus`].
pub const CLAIM_MARKER: &str = "zorblax";

/// Token that opens the claim run in [`sequential_corpus`].
pub const RESULTS_MARKER: &str = "henceforth";

/// Discourse labels of [`discourse_corpus`], in the order sentences appear.
pub const DISCOURSE_LABELS: [&str; 4] = ["BACKGROUND", "METHODS", "RESULTS", "CONCLUSIONS"];

fn filler_words(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

fn sentence<R: Rng>(rng: &mut R, filler: &[String], len: std::ops::RangeInclusive<usize>, cue: Option<&str>) -> String {
    let n = rng.gen_range(len);
    let mut words: Vec<String> = (0..n).map(|_| filler.choose(rng).expect("filler").clone()).collect();
    if let Some(c) = cue {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, c.to_string());
    }
    words.join(" ") + " ."
}

/// Claim corpus where a sentence is a claim exactly when it contains
/// [`CLAIM_MARKER`]. Every abstract has at least one claim and one
/// non-claim; the marker's sentence position and in-sentence position vary.
pub fn marker_corpus(n_abstracts: usize, seed: u64) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = filler_words(40);
    LabeledCorpus::from_claims((0..n_abstracts).map(|a| {
        let n = rng.gen_range(3..=6);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        let yes = rng.gen_range(0..n);
        labels[yes] = true;
        let mut no = rng.gen_range(0..n);
        while no == yes {
            no = rng.gen_range(0..n);
        }
        labels[no] = false;
        let sentences = labels
            .iter()
            .map(|&c| sentence(&mut rng, &filler, 3..=7, c.then_some(CLAIM_MARKER)))
            .collect();
        (Abstract::new(format!("marker-{a}"), "", sentences), labels)
    }))
}

fn cue_words(label: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{}{i}", label.to_lowercase())).collect()
}

/// Discourse corpus with sections in fixed order (background, methods,
/// results, conclusions), one or two sentences each. Each sentence carries
/// one cue word drawn from a per-label pool of `cues_per_label` words.
pub fn discourse_corpus(n_abstracts: usize, cues_per_label: usize, seed: u64) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = filler_words(30);
    let cues: Vec<Vec<String>> = DISCOURSE_LABELS.iter().map(|l| cue_words(l, cues_per_label)).collect();
    let abstracts = (0..n_abstracts)
        .map(|a| {
            let mut sentences = Vec::new();
            let mut labels = Vec::new();
            for (k, pool) in cues.iter().enumerate() {
                for _ in 0..rng.gen_range(1..=2) {
                    let cue = pool.choose(&mut rng).expect("cue").clone();
                    sentences.push(sentence(&mut rng, &filler, 2..=5, Some(&cue)));
                    labels.push(k);
                }
            }
            LabeledAbstract {
                doc: Abstract::new(format!("rct-{a}"), "", sentences),
                labels,
            }
        })
        .collect();
    LabeledCorpus {
        labels: DISCOURSE_LABELS.iter().map(|s| s.to_string()).collect(),
        abstracts,
        skipped_empty: 0,
    }
}

/// Pretext and target data sharing one token-to-label structure: claims in
/// the target are exactly the conclusion sentences.
#[derive(Clone, Debug)]
pub struct TransferTask {
    pub pretext_train: LabeledCorpus,
    pub pretext_val: LabeledCorpus,
    pub target_train: LabeledCorpus,
    pub target_val: LabeledCorpus,
}

/// Builds a [`TransferTask`] with `target_train` labelled target abstracts.
/// The cue pools are large relative to the target sample, so a model
/// trained on the target alone meets many unseen cue words at validation.
pub fn transfer_task(target_train: usize, seed: u64) -> TransferTask {
    const CUES: usize = 24;
    let concl = DISCOURSE_LABELS.len() - 1;
    let to_claims = |c: LabeledCorpus| {
        LabeledCorpus::from_claims(
            c.abstracts
                .into_iter()
                .map(|a| (a.doc, a.labels.iter().map(|&l| l == concl).collect())),
        )
    };
    TransferTask {
        pretext_train: discourse_corpus(160, CUES, seed.wrapping_mul(4).wrapping_add(1)),
        pretext_val: discourse_corpus(40, CUES, seed.wrapping_mul(4).wrapping_add(2)),
        target_train: to_claims(discourse_corpus(target_train, CUES, seed.wrapping_mul(4).wrapping_add(3))),
        target_val: to_claims(discourse_corpus(48, CUES, seed.wrapping_mul(4).wrapping_add(4))),
    }
}

/// Claim corpus with sequential structure: claims form a contiguous run at
/// the end of each abstract that opens with a sentence containing
/// [`RESULTS_MARKER`]; the later sentences of the run are plain filler,
/// indistinguishable in isolation from the non-claim sentences before it.
pub fn sequential_corpus(n_abstracts: usize, seed: u64) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = filler_words(30);
    LabeledCorpus::from_claims((0..n_abstracts).map(|a| {
        let n = rng.gen_range(5..=8);
        let start = rng.gen_range(1..n - 1);
        let sentences = (0..n)
            .map(|i| sentence(&mut rng, &filler, 3..=6, (i == start).then_some(RESULTS_MARKER)))
            .collect();
        let labels = (0..n).map(|i| i >= start).collect();
        (Abstract::new(format!("seq-{a}"), "", sentences), labels)
    }))
}
