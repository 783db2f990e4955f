use std::collections::BTreeMap;
use std::path::Path;

use claimx_core::corpus::Abstract;
use claimx_core::tagger::TaggerModel;
use claimx_core::text::split_sentences;

use crate::api::SentenceOut;
use crate::ServiceError;

/// A claim model plus an optional discourse model, both immutable.
pub struct Predictor {
    pub claim: TaggerModel,
    pub discourse: Option<TaggerModel>,
}

fn read_model(path: &Path) -> Result<TaggerModel, ServiceError> {
    let bytes = std::fs::read(path).map_err(|e| ServiceError::Startup(format!("{}: {e}", path.display())))?;
    TaggerModel::from_bytes(&bytes).map_err(|e| ServiceError::Startup(format!("{}: {e}", path.display())))
}

impl Predictor {
    pub fn load(claim: &Path, discourse: Option<&Path>) -> Result<Self, ServiceError> {
        let claim = read_model(claim)?;
        if claim.labels.len() != 2 {
            return Err(ServiceError::Startup(format!(
                "claim model must have two labels, has {:?}",
                claim.labels
            )));
        }
        let discourse = discourse.map(read_model).transpose()?;
        Ok(Predictor { claim, discourse })
    }

    /// Splits `text` into sentences and predicts each one.
    pub fn predict_text(&self, title: &str, text: &str) -> Result<Vec<SentenceOut>, ServiceError> {
        let sentences: Vec<String> = split_sentences(text).into_iter().map(|s| s.text).collect();
        if sentences.is_empty() {
            return Err(ServiceError::BadRequest("abstract_text contains no sentences".into()));
        }
        let doc = Abstract::new("request", title, sentences);
        let internal = |e: claimx_core::Error| ServiceError::Internal(e.to_string());
        let claims = self.claim.predict_claims(&doc).map_err(internal)?;
        let discourse = match &self.discourse {
            Some(m) => Some(m.predict(&doc).map_err(internal)?),
            None => None,
        };
        Ok(doc
            .sentences
            .into_iter()
            .zip(claims)
            .enumerate()
            .map(|(i, (text, (claim_prob, claim)))| SentenceOut {
                text,
                discourse_dist: discourse.as_ref().map(|d| {
                    let m = self.discourse.as_ref().expect("discourse model");
                    m.labels
                        .iter()
                        .cloned()
                        .zip(d[i].distribution.iter().copied())
                        .collect::<BTreeMap<_, _>>()
                }),
                claim_prob,
                claim,
            })
            .collect())
    }
}
