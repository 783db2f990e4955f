use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Prf1;
use crate::{Error, Result};

/// Which split a row was measured on. Ordering follows the variant order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Train,
    Validation,
    Test,
}

impl EvalSplit {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalSplit::Train => "train",
            EvalSplit::Validation => "validation",
            EvalSplit::Test => "test",
        }
    }
}

impl std::str::FromStr for EvalSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(EvalSplit::Train),
            "val" | "validation" => Ok(EvalSplit::Validation),
            "test" => Ok(EvalSplit::Test),
            other => Err(Error::Invalid(format!("unknown split `{other}` (expected train, validation or test)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub split: EvalSplit,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ComparisonRow {
    pub fn new(model: impl Into<String>, split: EvalSplit, m: &Prf1) -> Self {
        ComparisonRow {
            model: model.into(),
            split,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub dataset_hash: String,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub metadata: ReportMetadata,
}

/// Sorts rows by model name, then split, and checks metric ranges.
pub fn build_comparison(mut rows: Vec<ComparisonRow>, metadata: ReportMetadata) -> Result<ComparisonReport> {
    if rows.is_empty() {
        return Err(Error::Invalid("a comparison report needs at least one row".into()));
    }
    for r in &rows {
        for v in [r.precision, r.recall, r.f1] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!("metric {v} for `{}` outside [0, 1]", r.model)));
            }
        }
    }
    rows.sort_by(|a, b| a.model.cmp(&b.model).then(a.split.cmp(&b.split)));
    Ok(ComparisonReport { rows, metadata })
}

impl ComparisonReport {
    /// Aligned plain-text table followed by the reproducibility metadata.
    pub fn render_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max("model".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:<10}  {:>9}  {:>6}  {:>6}",
            "model", "split", "precision", "recall", "f1"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:<10}  {:>9.3}  {:>6.3}  {:>6.3}",
                r.model,
                r.split.as_str(),
                r.precision,
                r.recall,
                r.f1
            );
        }
        let m = &self.metadata;
        let _ = writeln!(out, "seed: {}", m.seed);
        let _ = writeln!(out, "dataset sha256: {}", m.dataset_hash);
        let _ = writeln!(out, "config sha256: {}", m.config_hash);
        out
    }

    /// One JSON object per row, each carrying the metadata.
    pub fn render_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let v = serde_json::json!({
                "model": r.model,
                "split": r.split,
                "precision": r.precision,
                "recall": r.recall,
                "f1": r.f1,
                "seed": self.metadata.seed,
                "dataset_hash": self.metadata.dataset_hash,
                "config_hash": self.metadata.config_hash,
            });
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ReportMetadata {
        ReportMetadata {
            seed: 7,
            dataset_hash: "d".into(),
            config_hash: "c".into(),
        }
    }

    fn row(model: &str, split: EvalSplit) -> ComparisonRow {
        ComparisonRow {
            model: model.into(),
            split,
            precision: 0.5,
            recall: 0.25,
            f1: 1.0 / 3.0,
        }
    }

    #[test]
    fn single_row_table() {
        let r = build_comparison(vec![row("last-sentence", EvalSplit::Test)], meta()).unwrap();
        let text = r.render_text();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("model"));
        assert_eq!(lines[1], "last-sentence  test            0.500   0.250   0.333");
        assert_eq!(r.render_jsonl().lines().count(), 1);
    }

    #[test]
    fn validation_precedes_test() {
        let r = build_comparison(
            vec![row("m", EvalSplit::Test), row("a", EvalSplit::Test), row("m", EvalSplit::Validation)],
            meta(),
        )
        .unwrap();
        let order: Vec<(&str, EvalSplit)> = r.rows.iter().map(|r| (r.model.as_str(), r.split)).collect();
        assert_eq!(
            order,
            vec![("a", EvalSplit::Test), ("m", EvalSplit::Validation), ("m", EvalSplit::Test)]
        );
    }

    #[test]
    fn empty_and_out_of_range_rows_rejected() {
        assert!(build_comparison(vec![], meta()).is_err());
        let mut bad = row("x", EvalSplit::Test);
        bad.f1 = 1.5;
        assert!(build_comparison(vec![bad], meta()).is_err());
    }
}
