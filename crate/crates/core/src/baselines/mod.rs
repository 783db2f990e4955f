//! Claim detectors that do not use transfer learning: keyword/pattern
//! rules, the last-sentence heuristic and SIF sentence embeddings with
//! logistic regression (optionally extended with discourse probabilities).

mod logreg;
mod rules;
mod sif;

use std::path::Path;

pub use logreg::{train_logreg, LogRegConfig, LogRegModel};
pub use rules::{rule_based_extract, Rule, RuleSet, GAP_WINDOW};
pub use sif::{
    remove_first_pc, sif_embed, sif_weight, PrincipalComponent, SifConfig, SifVector, WordFrequencies, DEFAULT_SIF_A,
    PC_TOLERANCE,
};

use crate::corpus::{Abstract, LabeledCorpus};
use crate::eval::ClaimPredictor;
use crate::tagger::TaggerModel;
use crate::text::{load_embeddings, tokenize, EmbeddingTable, Vocabulary};
use crate::{Error, Result};

/// Marks exactly the final sentence of each abstract.
pub fn last_sentence_baseline(doc: &Abstract) -> Vec<bool> {
    let n = doc.len();
    (0..n).map(|i| i + 1 == n).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LastSentence;

impl ClaimPredictor for LastSentence {
    fn name(&self) -> String {
        "last-sentence".into()
    }

    fn predict_claims(&self, doc: &Abstract) -> Result<Vec<bool>> {
        Ok(last_sentence_baseline(doc))
    }
}

#[derive(Clone, Debug)]
pub struct RuleBased {
    pub rules: RuleSet,
}

impl ClaimPredictor for RuleBased {
    fn name(&self) -> String {
        "rule-based".into()
    }

    fn predict_claims(&self, doc: &Abstract) -> Result<Vec<bool>> {
        Ok(doc
            .sentences
            .iter()
            .map(|s| rule_based_extract(&tokenize(s), &self.rules))
            .collect())
    }
}

/// Per-sentence discourse distributions for an abstract.
pub trait DiscourseSource: Send + Sync {
    fn num_labels(&self) -> usize;
    fn distributions(&self, doc: &Abstract) -> Result<Vec<Vec<f64>>>;
}

impl DiscourseSource for TaggerModel {
    fn num_labels(&self) -> usize {
        self.config.num_labels
    }

    fn distributions(&self, doc: &Abstract) -> Result<Vec<Vec<f64>>> {
        Ok(self.predict(doc)?.into_iter().map(|p| p.distribution).collect())
    }
}

/// Every sentence gets the uniform distribution over `k` labels.
#[derive(Clone, Copy, Debug)]
pub struct UniformDiscourse {
    pub k: usize,
}

impl DiscourseSource for UniformDiscourse {
    fn num_labels(&self) -> usize {
        self.k
    }

    fn distributions(&self, doc: &Abstract) -> Result<Vec<Vec<f64>>> {
        Ok(vec![vec![1.0 / self.k as f64; self.k]; doc.len()])
    }
}

/// SIF vector of sentence `index` followed by its discourse distribution.
pub fn features_with_discourse(
    sif: &[f64],
    discourse: &dyn DiscourseSource,
    doc: &Abstract,
    index: usize,
) -> Result<Vec<f64>> {
    if index >= doc.len() {
        return Err(Error::contract(format!(
            "sentence index {index} out of range for `{}` with {} sentences",
            doc.id,
            doc.len()
        )));
    }
    let dist = discourse.distributions(doc)?;
    Ok(sif.iter().chain(&dist[index]).copied().collect())
}

#[derive(Clone, Debug)]
pub struct SifClassifierConfig {
    pub sif: SifConfig,
    pub logreg: LogRegConfig,
    /// Dimension of the random table used when no embedding file is given.
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for SifClassifierConfig {
    fn default() -> Self {
        SifClassifierConfig {
            sif: SifConfig::default(),
            logreg: LogRegConfig::default(),
            embedding_dim: 50,
            seed: 13,
        }
    }
}

/// SIF sentence vectors with the training set's first principal component
/// removed, optionally joined with discourse probabilities, standardised
/// with training statistics and classified by L2-regularised logistic
/// regression.
pub struct SifClassifier {
    pub vocab: Vocabulary,
    pub table: EmbeddingTable,
    pub freqs: WordFrequencies,
    pub pc: PrincipalComponent,
    /// Per-feature `(mean, std)` from the training features.
    pub scaling: Vec<(f64, f64)>,
    pub model: LogRegModel,
    pub config: SifClassifierConfig,
    pub discourse: Option<Box<dyn DiscourseSource>>,
}

impl SifClassifier {
    /// Vocabulary and word frequencies come from `train`; `freqs`
    /// overrides the latter. Word vectors come from `embeddings` or a
    /// seeded random table.
    pub fn fit(
        train: &LabeledCorpus,
        embeddings: Option<&Path>,
        freqs: Option<WordFrequencies>,
        discourse: Option<Box<dyn DiscourseSource>>,
        config: SifClassifierConfig,
    ) -> Result<Self> {
        if train.labels.len() != 2 {
            return Err(Error::Invalid(format!("SIF classifier needs binary labels, got {:?}", train.labels)));
        }
        let sentences: Vec<Vec<String>> = train
            .abstracts
            .iter()
            .flat_map(|a| a.doc.sentences.iter().map(|s| tokenize(s)))
            .collect();
        let vocab = Vocabulary::build(sentences.iter().map(|s| s.as_slice()), 1);
        let table = match embeddings {
            Some(p) => load_embeddings(p, &vocab, config.seed)?,
            None => EmbeddingTable::random(vocab.len(), config.embedding_dim, config.seed),
        };
        let freqs = freqs.unwrap_or_else(|| WordFrequencies::from_vocab(&vocab));
        let raw: Vec<Vec<f64>> = sentences
            .iter()
            .map(|s| sif_embed(s, &vocab, &table, &freqs, &config.sif).values)
            .collect();
        let pc = remove_first_pc(&raw)?;
        let mut clf = SifClassifier {
            vocab,
            table,
            freqs,
            pc,
            scaling: Vec::new(),
            model: LogRegModel::zeros(0, 0.0),
            config,
            discourse,
        };
        let mut features = Vec::with_capacity(raw.len());
        let mut labels = Vec::with_capacity(raw.len());
        for a in &train.abstracts {
            features.extend(clf.features(&a.doc)?);
            labels.extend(a.labels.iter().map(|&l| l == 1));
        }
        clf.scaling = standardization(&features);
        let features: Vec<Vec<f64>> = features.iter().map(|f| clf.scale(f)).collect();
        clf.model = train_logreg(&features, &labels, &clf.config.logreg)?.0;
        Ok(clf)
    }

    /// Feature vectors of every sentence in `doc`.
    pub fn features(&self, doc: &Abstract) -> Result<Vec<Vec<f64>>> {
        let dists = match &self.discourse {
            Some(d) => Some(d.distributions(doc)?),
            None => None,
        };
        Ok(doc
            .sentences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let v = sif_embed(&tokenize(s), &self.vocab, &self.table, &self.freqs, &self.config.sif);
                let mut f = self.pc.remove(&v.values);
                if let Some(d) = &dists {
                    f.extend_from_slice(&d[i]);
                }
                f
            })
            .collect())
    }

    fn scale(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.scaling).map(|(x, (m, s))| (x - m) / s).collect()
    }

    pub fn probabilities(&self, doc: &Abstract) -> Result<Vec<f64>> {
        self.features(doc)?.iter().map(|f| self.model.predict(&self.scale(f))).collect()
    }
}

/// Column means and standard deviations; constant columns get std 1.
fn standardization(rows: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = rows.len().max(1) as f64;
    let d = rows.first().map_or(0, Vec::len);
    (0..d)
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mean, if sd > 1e-12 { sd } else { 1.0 })
        })
        .collect()
}

impl ClaimPredictor for SifClassifier {
    fn name(&self) -> String {
        if self.discourse.is_some() {
            "sif-discourse".into()
        } else {
            "sif".into()
        }
    }

    fn predict_claims(&self, doc: &Abstract) -> Result<Vec<bool>> {
        Ok(self.probabilities(doc)?.into_iter().map(|p| p > 0.5).collect())
    }
}
