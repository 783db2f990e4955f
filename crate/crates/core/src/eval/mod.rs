//! Sentence-level metrics, agreement statistics and comparison reports.

mod agreement;
mod metrics;
mod report;

use serde::Serialize;

pub use agreement::{annotator_agreement, AgreementReport, PairAgreement};
pub use metrics::{cohen_kappa, fleiss_kappa, prf1, BinaryCounts, Kappa, Prf1};
pub use report::{build_comparison, ComparisonReport, ComparisonRow, EvalSplit, ReportMetadata};

use crate::corpus::{Abstract, LabeledCorpus};
use crate::{Error, Result};

/// Anything that labels every sentence of an abstract as claim or not.
pub trait ClaimPredictor {
    fn name(&self) -> String;
    fn predict_claims(&self, doc: &Abstract) -> Result<Vec<bool>>;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbstractErrors {
    pub abstract_id: String,
    pub misclassified: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub counts: BinaryCounts,
    pub metrics: Prf1,
    pub abstracts: usize,
    /// Fraction of abstracts with every sentence predicted correctly.
    pub exact_match: f64,
    /// Abstracts with more than one misclassified sentence.
    pub error_listing: Vec<AbstractErrors>,
}

/// Runs `model` over `(abstract, gold)` pairs.
pub fn evaluate_model<'a, P: ClaimPredictor + ?Sized>(
    model: &P,
    split: impl IntoIterator<Item = (&'a Abstract, &'a [bool])>,
) -> Result<Evaluation> {
    let mut counts = BinaryCounts::default();
    let mut abstracts = 0;
    let mut exact = 0;
    let mut error_listing = Vec::new();
    for (doc, gold) in split {
        let pred = model.predict_claims(doc)?;
        if pred.len() != gold.len() {
            return Err(Error::Integrity {
                abstract_id: doc.id.clone(),
                message: format!("{} predicted {} labels for {} sentences", model.name(), pred.len(), gold.len()),
            });
        }
        counts.merge(BinaryCounts::from_pairs(&pred, gold)?);
        abstracts += 1;
        let wrong: Vec<usize> = (0..gold.len()).filter(|&i| pred[i] != gold[i]).collect();
        if wrong.is_empty() {
            exact += 1;
        }
        if wrong.len() > 1 {
            error_listing.push(AbstractErrors {
                abstract_id: doc.id.clone(),
                misclassified: wrong,
            });
        }
    }
    Ok(Evaluation {
        counts,
        metrics: counts.prf1(),
        abstracts,
        exact_match: if abstracts == 0 { 0.0 } else { exact as f64 / abstracts as f64 },
        error_listing,
    })
}

/// [`evaluate_model`] over a binary corpus whose label 1 is the claim.
pub fn evaluate_corpus<P: ClaimPredictor + ?Sized>(model: &P, corpus: &LabeledCorpus) -> Result<Evaluation> {
    if corpus.labels.len() != 2 {
        return Err(Error::Invalid(format!("expected a binary claim corpus, got labels {:?}", corpus.labels)));
    }
    let golds: Vec<Vec<bool>> = corpus
        .abstracts
        .iter()
        .map(|a| a.labels.iter().map(|&l| l == 1).collect())
        .collect();
    evaluate_model(model, corpus.abstracts.iter().map(|a| &a.doc).zip(golds.iter().map(Vec::as_slice)))
}

/// Lowercase hex SHA-256, used for dataset and config fingerprints.
pub fn content_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
