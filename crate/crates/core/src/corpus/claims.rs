//! Claim corpus: UTF-8 JSON lines, one abstract per line.
//!
//! ```json
//! {"v":1,"id":"23287718","title":"...","sentences":["...","..."],
//!  "annotations":[{"annotator_id":"a1","labels":[false,true],"timestamp":"..."}],
//!  "gold_labels":[false,true]}
//! ```
//!
//! `labels` and `gold_labels` accept booleans or 0/1 integers and are
//! written back as booleans. `gold_labels` is optional.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use super::Abstract;
use crate::{Error, Result};

/// One annotator's per-sentence judgements for one abstract.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    /// Filled in from the enclosing record when parsing.
    #[serde(skip)]
    pub abstract_id: String,
    pub annotator_id: String,
    #[serde(deserialize_with = "flags")]
    pub labels: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    #[serde(default = "format_version")]
    pub v: u32,
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub sentences: Vec<String>,
    #[serde(default)]
    pub annotations: Vec<AnnotationRecord>,
    #[serde(default, deserialize_with = "opt_flags", skip_serializing_if = "Option::is_none")]
    pub gold_labels: Option<Vec<bool>>,
}

fn format_version() -> u32 {
    1
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Flag {
    Bool(bool),
    Int(u8),
}

fn to_bool<E: serde::de::Error>(f: Flag) -> Result<bool, E> {
    match f {
        Flag::Bool(b) => Ok(b),
        Flag::Int(0) => Ok(false),
        Flag::Int(1) => Ok(true),
        Flag::Int(n) => Err(E::custom(format!("label must be 0 or 1, got {n}"))),
    }
}

fn flags<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
    Vec::<Flag>::deserialize(d)?.into_iter().map(to_bool).collect()
}

fn opt_flags<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<bool>>, D::Error> {
    match Option::<Vec<Flag>>::deserialize(d)? {
        None => Ok(None),
        Some(v) => v.into_iter().map(to_bool).collect::<Result<_, _>>().map(Some),
    }
}

impl ClaimRecord {
    pub fn to_abstract(&self) -> Abstract {
        Abstract::new(self.id.clone(), self.title.clone(), self.sentences.clone())
    }

    /// Gold labels if present, otherwise the majority vote of the
    /// annotations, otherwise `None`.
    pub fn resolved_labels(&self) -> Option<Vec<bool>> {
        if let Some(g) = &self.gold_labels {
            return Some(g.clone());
        }
        if self.annotations.is_empty() {
            return None;
        }
        super::majority_vote(&self.annotations).ok().map(|v| v.labels)
    }

    fn validate(&self) -> Result<()> {
        let n = self.sentences.len();
        let integrity = |message: String| Error::Integrity {
            abstract_id: self.id.clone(),
            message,
        };
        if n == 0 {
            return Err(integrity("abstract has no sentences".into()));
        }
        let mut seen = HashSet::new();
        for a in &self.annotations {
            if a.labels.len() != n {
                return Err(integrity(format!(
                    "annotator `{}` gave {} labels for {n} sentences",
                    a.annotator_id,
                    a.labels.len()
                )));
            }
            if !seen.insert(a.annotator_id.as_str()) {
                return Err(integrity(format!("annotator `{}` appears twice", a.annotator_id)));
            }
        }
        if let Some(g) = &self.gold_labels {
            if g.len() != n {
                return Err(integrity(format!("{} gold labels for {n} sentences", g.len())));
            }
        }
        Ok(())
    }
}

pub fn read_claim_corpus(path: &Path) -> Result<Vec<ClaimRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_claim_corpus(&text, &path.display().to_string())
}

/// Parses every non-blank line; abstract ids must be unique.
pub fn parse_claim_corpus(text: &str, source: &str) -> Result<Vec<ClaimRecord>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: ClaimRecord =
            serde_json::from_str(line).map_err(|e| Error::format(source, idx + 1, e.to_string()))?;
        for a in &mut rec.annotations {
            a.abstract_id = rec.id.clone();
        }
        rec.validate()?;
        if !ids.insert(rec.id.clone()) {
            return Err(Error::Integrity {
                abstract_id: rec.id,
                message: "duplicate abstract id".into(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_claim_corpus(records: &[ClaimRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("claim record serialises"));
        out.push('\n');
    }
    out
}
