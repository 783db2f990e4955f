use super::model::TaggerModel;
use crate::corpus::{Abstract, CLAIM_LABELS};
use crate::crf::{marginals, viterbi_decode};
use crate::tensor::{softmax, Tensor};
use crate::{Error, Result};

/// Without a CRF a sentence is a claim when its probability is strictly
/// above this value.
pub const CLAIM_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct SentencePrediction {
    /// Decoded label id: the Viterbi path with a CRF, otherwise the argmax
    /// (binary models use the strict threshold instead).
    pub label: usize,
    /// Per-label probabilities summing to one.
    pub distribution: Vec<f64>,
}

fn claim_index(labels: &[String]) -> Option<usize> {
    if labels.len() != 2 {
        return None;
    }
    labels.iter().position(|l| l == CLAIM_LABELS[1]).or(Some(1))
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

impl TaggerModel {
    /// Eval-mode prediction for already tokenised sentences.
    pub fn predict_tokens(&self, tokens: &[Vec<usize>]) -> Result<Vec<SentencePrediction>> {
        let em = self.emissions(tokens)?;
        Ok(decode(&em, self.crf().map(|c| c.params(&self.store)).as_ref(), claim_index(&self.labels)))
    }

    pub fn predict(&self, doc: &Abstract) -> Result<Vec<SentencePrediction>> {
        if doc.sentences.is_empty() {
            return Ok(Vec::new());
        }
        self.predict_tokens(&self.encode_tokens(doc))
    }

    /// `(claim probability, claim decision)` per sentence. Only valid for
    /// two-label models.
    pub fn predict_claims(&self, doc: &Abstract) -> Result<Vec<(f64, bool)>> {
        let ci = claim_index(&self.labels)
            .ok_or_else(|| Error::Invalid(format!("model labels {:?} are not binary", self.labels)))?;
        Ok(self
            .predict(doc)?
            .into_iter()
            .map(|p| (p.distribution[ci], p.label == ci))
            .collect())
    }
}

impl crate::eval::ClaimPredictor for TaggerModel {
    fn name(&self) -> String {
        if self.config.use_crf {
            "tagger-crf".into()
        } else {
            "tagger".into()
        }
    }

    fn predict_claims(&self, doc: &Abstract) -> Result<Vec<bool>> {
        Ok(TaggerModel::predict_claims(self, doc)?.into_iter().map(|(_, c)| c).collect())
    }
}

fn decode(em: &Tensor, crf: Option<&crate::crf::CrfParams>, claim: Option<usize>) -> Vec<SentencePrediction> {
    match crf {
        Some(p) => {
            let m = marginals(em, p);
            let (path, _) = viterbi_decode(em, p);
            path.into_iter()
                .enumerate()
                .map(|(t, label)| SentencePrediction {
                    label,
                    distribution: m.row(t).to_vec(),
                })
                .collect()
        }
        None => (0..em.rows())
            .map(|t| {
                let distribution = softmax(em.row(t));
                let label = match claim {
                    Some(ci) => {
                        if distribution[ci] > CLAIM_THRESHOLD {
                            ci
                        } else {
                            1 - ci
                        }
                    }
                    None => argmax(&distribution),
                };
                SentencePrediction { label, distribution }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::CrfParams;
    use proptest::prelude::*;

    #[test]
    fn tie_is_not_a_claim() {
        let em = Tensor::matrix(1, 2, vec![0.0, 0.0]).unwrap();
        let p = decode(&em, None, Some(1));
        assert_eq!(p[0].distribution, vec![0.5, 0.5]);
        assert_eq!(p[0].label, 0);
    }

    #[test]
    fn crf_labels_follow_viterbi_even_against_marginals() {
        // strong 1->1 transition pulls both sentences to label 1 jointly
        let em = Tensor::matrix(2, 2, vec![0.3, 0.0, 0.0, 2.0]).unwrap();
        let mut p = CrfParams::zeros(2);
        p.transitions = vec![0.0, -5.0, 0.0, 1.0];
        let out = decode(&em, Some(&p), Some(1));
        let (path, _) = viterbi_decode(&em, &p);
        assert_eq!(out.iter().map(|s| s.label).collect::<Vec<_>>(), path);
    }

    proptest! {
        #[test]
        fn distributions_are_normalised(vals in proptest::collection::vec(-8.0f64..8.0, 12), crf in any::<bool>()) {
            let em = Tensor::matrix(4, 3, vals).unwrap();
            let mut p = CrfParams::zeros(3);
            p.transitions = (0..9).map(|i| (i as f64 * 0.37).sin()).collect();
            let out = decode(&em, if crf { Some(&p) } else { None }, None);
            for s in out {
                prop_assert!((s.distribution.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
