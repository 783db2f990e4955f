use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use crate::{Error, Result};

/// Confusion counts with "claim" as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BinaryCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl BinaryCounts {
    pub fn from_pairs(predictions: &[bool], golds: &[bool]) -> Result<Self> {
        if predictions.len() != golds.len() {
            return Err(Error::contract(format!(
                "{} predictions for {} gold labels",
                predictions.len(),
                golds.len()
            )));
        }
        let mut c = BinaryCounts::default();
        for (&p, &g) in predictions.iter().zip(golds) {
            match (p, g) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn merge(&mut self, other: BinaryCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    pub fn prf1(&self) -> Prf1 {
        let ratio = |num: usize, den: usize| if den == 0 { None } else { Some(num as f64 / den as f64) };
        let p = ratio(self.tp, self.tp + self.fp);
        let r = ratio(self.tp, self.tp + self.fn_);
        let (precision, recall) = (p.unwrap_or(0.0), r.unwrap_or(0.0));
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf1 {
            precision,
            recall,
            f1,
            degenerate: p.is_none() || r.is_none() || precision + recall == 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// A zero denominator was replaced by 0.
    pub degenerate: bool,
}

/// Micro-averaged precision, recall and F1 of the positive class.
pub fn prf1(predictions: &[bool], golds: &[bool]) -> Result<Prf1> {
    Ok(BinaryCounts::from_pairs(predictions, golds)?.prf1())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kappa {
    pub value: f64,
    /// Chance agreement was 1 while observed agreement was not.
    pub degenerate: bool,
}

fn kappa_from(p_o: f64, p_e: f64) -> Kappa {
    if (1.0 - p_e).abs() < 1e-15 {
        let perfect = (1.0 - p_o).abs() < 1e-15;
        return Kappa {
            value: if perfect { 1.0 } else { 0.0 },
            degenerate: !perfect,
        };
    }
    Kappa {
        value: (p_o - p_e) / (1.0 - p_e),
        degenerate: false,
    }
}

/// Cohen's kappa for two raters over the same items.
pub fn cohen_kappa<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<Kappa> {
    if a.len() != b.len() {
        return Err(Error::contract(format!("rater sequences differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Invalid("cohen_kappa needs at least one item".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let mut ca: HashMap<&T, usize> = HashMap::new();
    let mut cb: HashMap<&T, usize> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    // sorted so the floating-point sum does not depend on hash order
    let mut terms: Vec<f64> = ca
        .iter()
        .map(|(k, &na)| na as f64 * cb.get(k).copied().unwrap_or(0) as f64)
        .collect();
    terms.sort_by(f64::total_cmp);
    let p_e = terms.iter().sum::<f64>() / (n * n);
    Ok(kappa_from(agree / n, p_e))
}

/// Fleiss' kappa from an items x categories matrix of rater counts. Every
/// row must sum to the same number of raters, at least two.
pub fn fleiss_kappa(counts: &[Vec<usize>]) -> Result<Kappa> {
    let first = counts
        .first()
        .ok_or_else(|| Error::Invalid("fleiss_kappa needs at least one item".into()))?;
    let k = first.len();
    let raters: usize = first.iter().sum();
    if raters < 2 {
        return Err(Error::Invalid(format!("fleiss_kappa needs at least two raters per item, got {raters}")));
    }
    for (i, row) in counts.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Invalid(format!("item {i} has {} categories, expected {k}", row.len())));
        }
        let s: usize = row.iter().sum();
        if s != raters {
            return Err(Error::Invalid(format!("item {i} has {s} ratings, expected {raters}")));
        }
    }
    let n = raters as f64;
    let items = counts.len() as f64;
    let p_bar = counts
        .iter()
        .map(|row| row.iter().map(|&c| (c * c) as f64).sum::<f64>() - n)
        .sum::<f64>()
        / (items * n * (n - 1.0));
    let p_e = (0..k)
        .map(|j| {
            let pj = counts.iter().map(|r| r[j]).sum::<usize>() as f64 / (items * n);
            pj * pj
        })
        .sum::<f64>();
    Ok(kappa_from(p_bar, p_e))
}
