//! Abstracts, their labels, and the two on-disk corpus formats.

mod claims;
mod discourse;
mod split;
mod stats;
mod vote;

use serde::{Deserialize, Serialize};

pub use claims::{parse_claim_corpus, read_claim_corpus, write_claim_corpus, AnnotationRecord, ClaimRecord};
pub use discourse::{parse_discourse_corpus, read_discourse_corpus, write_discourse_corpus};
pub use split::{make_splits, Split, SplitSpec};
pub use stats::{corpus_stats, CorpusStats};
pub use vote::{majority_vote, VoteOutcome};

/// Label names of the binary claim task, indexed by label id.
pub const CLAIM_LABELS: [&str; 2] = ["no_claim", "claim"];

/// An identified document with an ordered, non-empty list of sentences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abstract {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub sentences: Vec<String>,
}

impl Abstract {
    pub fn new(id: impl Into<String>, title: impl Into<String>, sentences: Vec<String>) -> Self {
        Abstract {
            id: id.into(),
            title: title.into(),
            sentences,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// An abstract with one label id per sentence; ids index into the owning
/// corpus' `labels`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledAbstract {
    pub doc: Abstract,
    pub labels: Vec<usize>,
}

/// A closed label vocabulary plus the abstracts labelled with it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub labels: Vec<String>,
    pub abstracts: Vec<LabeledAbstract>,
    /// Header blocks that carried no sentences and were dropped.
    pub skipped_empty: usize,
}

/// Discourse corpora are plain labelled corpora with a data-defined label set.
pub type DiscourseCorpus = LabeledCorpus;

impl LabeledCorpus {
    pub fn label_id(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    pub fn len(&self) -> usize {
        self.abstracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abstracts.is_empty()
    }

    pub fn sentence_count(&self) -> usize {
        self.abstracts.iter().map(|a| a.doc.len()).sum()
    }

    /// Binary claim corpus from per-sentence booleans.
    pub fn from_claims(items: impl IntoIterator<Item = (Abstract, Vec<bool>)>) -> Self {
        LabeledCorpus {
            labels: CLAIM_LABELS.iter().map(|s| s.to_string()).collect(),
            abstracts: items
                .into_iter()
                .map(|(doc, labels)| LabeledAbstract {
                    doc,
                    labels: labels.into_iter().map(usize::from).collect(),
                })
                .collect(),
            skipped_empty: 0,
        }
    }

    /// Binary claim corpus from annotated records, using gold labels where
    /// present and the annotators' majority vote otherwise.
    pub fn from_records(records: &[ClaimRecord]) -> crate::Result<Self> {
        let items = records
            .iter()
            .map(|r| {
                r.resolved_labels()
                    .map(|l| (r.to_abstract(), l))
                    .ok_or_else(|| crate::Error::Integrity {
                        abstract_id: r.id.clone(),
                        message: "record has neither gold labels nor annotations".into(),
                    })
            })
            .collect::<crate::Result<Vec<_>>>()?;
        Ok(LabeledCorpus::from_claims(items))
    }

    /// Records carrying the claim flags as gold labels, without annotations.
    pub fn to_claim_records(&self) -> Vec<ClaimRecord> {
        self.abstracts
            .iter()
            .map(|a| ClaimRecord {
                v: 1,
                id: a.doc.id.clone(),
                title: a.doc.title.clone(),
                sentences: a.doc.sentences.clone(),
                annotations: Vec::new(),
                gold_labels: Some(a.labels.iter().map(|&l| l == 1).collect()),
            })
            .collect()
    }

    /// Per-abstract claim flags (label 1) of a binary corpus.
    pub fn claim_flags(&self) -> Vec<Vec<bool>> {
        self.abstracts
            .iter()
            .map(|a| a.labels.iter().map(|&l| l == 1).collect())
            .collect()
    }

    /// Keeps the label set, replaces the abstracts.
    pub fn with_abstracts(&self, abstracts: Vec<LabeledAbstract>) -> Self {
        LabeledCorpus {
            labels: self.labels.clone(),
            abstracts,
            skipped_empty: 0,
        }
    }

    /// Claim labels relabelled from a discourse corpus: sentences carrying
    /// `positive` become claims, all others not.
    pub fn relabel_as_claims(&self, positive: &str) -> crate::Result<Self> {
        let pos = self
            .label_id(positive)
            .ok_or_else(|| crate::Error::Invalid(format!("label `{positive}` is not in the corpus label set")))?;
        Ok(LabeledCorpus::from_claims(self.abstracts.iter().map(|a| {
            (a.doc.clone(), a.labels.iter().map(|&l| l == pos).collect())
        })))
    }
}
