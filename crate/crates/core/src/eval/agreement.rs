use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{cohen_kappa, fleiss_kappa, Kappa};
use crate::corpus::ClaimRecord;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairAgreement {
    pub a: String,
    pub b: String,
    /// Sentences labelled by both annotators.
    pub items: usize,
    pub kappa: Kappa,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementReport {
    /// One entry per annotator pair with shared sentences, ordered by ids.
    pub pairwise: Vec<PairAgreement>,
    /// Raters per item used for Fleiss' kappa.
    pub raters: usize,
    /// Sentences entering Fleiss' kappa.
    pub fleiss_items: usize,
    pub fleiss: Option<Kappa>,
}

/// Sentence-level agreement between annotators.
///
/// Cohen's kappa is computed for every annotator pair over the sentences of
/// the abstracts both annotated. Fleiss' kappa uses the abstracts whose
/// annotator count equals the most common count (larger count on ties),
/// with at least two raters.
pub fn annotator_agreement(records: &[ClaimRecord]) -> Result<AgreementReport> {
    let ids: BTreeSet<&str> = records
        .iter()
        .flat_map(|r| r.annotations.iter().map(|a| a.annotator_id.as_str()))
        .collect();
    let ids: Vec<&str> = ids.into_iter().collect();
    let mut pairwise = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let mut la = Vec::new();
            let mut lb = Vec::new();
            for r in records {
                let find = |id: &str| r.annotations.iter().find(|x| x.annotator_id == id);
                if let (Some(x), Some(y)) = (find(a), find(b)) {
                    la.extend_from_slice(&x.labels);
                    lb.extend_from_slice(&y.labels);
                }
            }
            if la.is_empty() {
                continue;
            }
            pairwise.push(PairAgreement {
                a: a.to_string(),
                b: b.to_string(),
                items: la.len(),
                kappa: cohen_kappa(&la, &lb)?,
            });
        }
    }

    let mut by_count: BTreeMap<usize, usize> = BTreeMap::new();
    for r in records.iter().filter(|r| r.annotations.len() >= 2) {
        *by_count.entry(r.annotations.len()).or_default() += 1;
    }
    let raters = by_count
        .iter()
        .max_by_key(|&(&n, &c)| (c, n))
        .map_or(0, |(&n, _)| n);
    let mut rows = Vec::new();
    for r in records.iter().filter(|r| raters > 0 && r.annotations.len() == raters) {
        for s in 0..r.sentences.len() {
            let yes = r.annotations.iter().filter(|a| a.labels[s]).count();
            rows.push(vec![raters - yes, yes]);
        }
    }
    let fleiss = if rows.is_empty() { None } else { Some(fleiss_kappa(&rows)?) };
    Ok(AgreementReport {
        pairwise,
        raters,
        fleiss_items: rows.len(),
        fleiss,
    })
}

impl AgreementReport {
    pub fn render(&self) -> String {
        let mut out = String::from("pairwise cohen kappa:\n");
        for p in &self.pairwise {
            out.push_str(&format!(
                "  {} / {}  {:.3}{}  ({} sentences)\n",
                p.a,
                p.b,
                p.kappa.value,
                if p.kappa.degenerate { " (degenerate)" } else { "" },
                p.items
            ));
        }
        match &self.fleiss {
            Some(k) => out.push_str(&format!(
                "fleiss kappa: {:.3} ({} raters, {} sentences)\n",
                k.value, self.raters, self.fleiss_items
            )),
            None => out.push_str("fleiss kappa: n/a\n"),
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::AnnotationRecord;

    fn rec(id: &str, anns: &[(&str, &[bool])]) -> ClaimRecord {
        ClaimRecord {
            v: 1,
            id: id.into(),
            title: String::new(),
            sentences: (0..anns[0].1.len()).map(|i| format!("s{i}")).collect(),
            annotations: anns
                .iter()
                .map(|(who, l)| AnnotationRecord {
                    abstract_id: id.into(),
                    annotator_id: who.to_string(),
                    labels: l.to_vec(),
                    timestamp: None,
                })
                .collect(),
            gold_labels: None,
        }
    }

    #[test]
    fn pairs_pool_shared_abstracts() {
        let records = vec![
            rec("1", &[("x", &[true, false]), ("y", &[true, true]), ("z", &[true, false])]),
            rec("2", &[("x", &[false, false]), ("y", &[false, true]), ("z", &[true, false])]),
        ];
        let r = annotator_agreement(&records).unwrap();
        let names: Vec<(&str, &str, usize)> = r.pairwise.iter().map(|p| (p.a.as_str(), p.b.as_str(), p.items)).collect();
        assert_eq!(names, vec![("x", "y", 4), ("x", "z", 4), ("y", "z", 4)]);
        let xy = cohen_kappa(&[true, false, false, false], &[true, true, false, true]).unwrap();
        assert_eq!(r.pairwise[0].kappa, xy);
        let fleiss = fleiss_kappa(&[vec![0, 3], vec![2, 1], vec![2, 1], vec![2, 1]]).unwrap();
        assert!(fleiss.value.abs() < 1e-12);
        assert_eq!(r.fleiss, Some(fleiss));
        assert_eq!((r.raters, r.fleiss_items), (3, 4));
    }

    #[test]
    fn single_annotator_has_no_agreement() {
        let r = annotator_agreement(&[rec("1", &[("x", &[true])])]).unwrap();
        assert!(r.pairwise.is_empty());
        assert_eq!(r.fleiss, None);
    }
}
