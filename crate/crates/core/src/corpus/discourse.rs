//! PubMedRCT text layout:
//!
//! ```text
//! ###24491034
//! BACKGROUND\tThe emergence of ...
//! METHODS\tWe ...
//!
//! ###24491035
//! ...
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::{Abstract, LabeledAbstract, LabeledCorpus};
use crate::{Error, Result};

pub fn read_discourse_corpus(path: &Path) -> Result<LabeledCorpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_discourse_corpus(&text, &path.display().to_string())
}

/// Parses the whole file. The label vocabulary is the sorted set of labels
/// that occur in the data.
pub fn parse_discourse_corpus(text: &str, source: &str) -> Result<LabeledCorpus> {
    struct Block {
        id: String,
        sentences: Vec<(String, String)>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut current: Option<Block> = None;
    let mut skipped = 0;
    let mut close = |cur: &mut Option<Block>, blocks: &mut Vec<Block>| {
        if let Some(b) = cur.take() {
            if b.sentences.is_empty() {
                skipped += 1;
            } else {
                blocks.push(b);
            }
        }
    };
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(id) = line.strip_prefix("###") {
            close(&mut current, &mut blocks);
            let id = id.trim();
            if id.is_empty() {
                return Err(Error::format(source, lineno, "abstract header without id"));
            }
            current = Some(Block {
                id: id.to_string(),
                sentences: Vec::new(),
            });
            continue;
        }
        if line.trim().is_empty() {
            close(&mut current, &mut blocks);
            continue;
        }
        let Some(block) = current.as_mut() else {
            return Err(Error::format(source, lineno, "sentence line outside an abstract block"));
        };
        let Some((label, sentence)) = line.split_once('\t') else {
            return Err(Error::format(source, lineno, "missing tab between label and sentence"));
        };
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(Error::format(source, lineno, format!("invalid label `{label}`")));
        }
        block.sentences.push((label.to_string(), sentence.to_string()));
    }
    close(&mut current, &mut blocks);

    let labels: Vec<String> = blocks
        .iter()
        .flat_map(|b| b.sentences.iter().map(|(l, _)| l.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let abstracts = blocks
        .into_iter()
        .map(|b| {
            let (ls, ss): (Vec<String>, Vec<String>) = b.sentences.into_iter().unzip();
            LabeledAbstract {
                doc: Abstract::new(b.id, "", ss),
                labels: ls
                    .iter()
                    .map(|l| labels.binary_search(l).expect("label collected above"))
                    .collect(),
            }
        })
        .collect();
    Ok(LabeledCorpus {
        labels,
        abstracts,
        skipped_empty: skipped,
    })
}

pub fn write_discourse_corpus(corpus: &LabeledCorpus) -> String {
    let mut out = String::new();
    for a in &corpus.abstracts {
        out.push_str("###");
        out.push_str(&a.doc.id);
        out.push('\n');
        for (l, s) in a.labels.iter().zip(&a.doc.sentences) {
            out.push_str(&corpus.labels[*l]);
            out.push('\t');
            out.push_str(s);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_block() {
        let c = parse_discourse_corpus("###24\nOBJECTIVE\tTo assess X.\nCONCLUSIONS\tX works.\n", "t").unwrap();
        assert_eq!(c.abstracts.len(), 1);
        let a = &c.abstracts[0];
        assert_eq!(a.doc.id, "24");
        assert_eq!(a.doc.sentences, vec!["To assess X.", "X works."]);
        let names: Vec<&str> = a.labels.iter().map(|&l| c.labels[l].as_str()).collect();
        assert_eq!(names, vec!["OBJECTIVE", "CONCLUSIONS"]);
    }

    #[test]
    fn blocks_keep_file_order() {
        let text = "###3\nA\tx\n\n###1\nB\ty\n\n###2\nA\tz\n";
        let c = parse_discourse_corpus(text, "t").unwrap();
        let ids: Vec<&str> = c.abstracts.iter().map(|a| a.doc.id.as_str()).collect();
        assert_eq!(ids, vec!["3", "1", "2"]);
        assert_eq!(c.labels, vec!["A", "B"]);
    }

    #[test]
    fn missing_tab_cites_line() {
        let err = parse_discourse_corpus("###1\nMETHODS no tab here\n", "rct.txt").unwrap_err();
        assert_eq!(err.to_string(), "rct.txt:2: missing tab between label and sentence");
    }

    #[test]
    fn empty_blocks_are_counted_and_skipped() {
        let c = parse_discourse_corpus("###1\n\n###2\nA\tx\n###3\n", "t").unwrap();
        assert_eq!(c.abstracts.len(), 1);
        assert_eq!(c.skipped_empty, 2);
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(
            blocks in proptest::collection::vec(
                proptest::collection::vec((0usize..3, "[A-Za-z0-9 ,.]{1,20}"), 1..5), 0..5)
        ) {
            let labels: Vec<String> = ["BACKGROUND", "METHODS", "RESULTS"].iter().map(|s| s.to_string()).collect();
            let abstracts: Vec<LabeledAbstract> = blocks.iter().enumerate().map(|(i, b)| LabeledAbstract {
                doc: Abstract::new(format!("{}", 100 + i), "", b.iter().map(|(_, s)| s.clone()).collect()),
                labels: b.iter().map(|(l, _)| *l).collect(),
            }).collect();
            let corpus = LabeledCorpus { labels, abstracts, skipped_empty: 0 };
            let parsed = parse_discourse_corpus(&write_discourse_corpus(&corpus), "t").unwrap();
            // the parsed label set only holds labels that occur
            let again = parse_discourse_corpus(&write_discourse_corpus(&parsed), "t").unwrap();
            prop_assert_eq!(&parsed, &again);
            prop_assert_eq!(parsed.abstracts.len(), corpus.abstracts.len());
            for (p, c) in parsed.abstracts.iter().zip(&corpus.abstracts) {
                prop_assert_eq!(&p.doc, &c.doc);
                let pn: Vec<&String> = p.labels.iter().map(|&l| &parsed.labels[l]).collect();
                let cn: Vec<&String> = c.labels.iter().map(|&l| &corpus.labels[l]).collect();
                prop_assert_eq!(pn, cn);
            }
        }
    }
}
