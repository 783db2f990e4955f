use super::AnnotationRecord;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteOutcome {
    pub labels: Vec<bool>,
    /// Sentence indices whose votes split exactly in half (resolved to
    /// not-claim).
    pub ties: Vec<usize>,
}

/// A sentence is a claim iff strictly more than half of the annotators
/// marked it.
pub fn majority_vote(records: &[AnnotationRecord]) -> Result<VoteOutcome> {
    let first = records
        .first()
        .ok_or_else(|| Error::contract("majority vote needs at least one annotation"))?;
    let n = first.labels.len();
    if let Some(bad) = records.iter().find(|r| r.labels.len() != n) {
        return Err(Error::Integrity {
            abstract_id: bad.abstract_id.clone(),
            message: format!(
                "annotator `{}` has {} labels, expected {n}",
                bad.annotator_id,
                bad.labels.len()
            ),
        });
    }
    let voters = records.len();
    let mut labels = Vec::with_capacity(n);
    let mut ties = Vec::new();
    for i in 0..n {
        let yes = records.iter().filter(|r| r.labels[i]).count();
        if 2 * yes == voters {
            ties.push(i);
        }
        labels.push(2 * yes > voters);
    }
    Ok(VoteOutcome { labels, ties })
}
