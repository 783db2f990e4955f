use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Token ↔ id map with dense ids. Keeps the frequency of every token seen,
/// including those pruned by `min_count`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    ids: HashMap<String, usize>,
    counts: HashMap<String, u64>,
    total: u64,
}

impl Vocabulary {
    /// Ids are assigned by descending frequency, ties broken
    /// lexicographically, after the reserved PAD and UNK entries.
    pub fn build<'a, I, S>(sequences: I, min_count: u64) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        assert!(min_count >= 1, "min_count must be at least 1");
        let mut counts: HashMap<String, u64> = HashMap::new();
        for seq in sequences {
            for tok in seq {
                *counts.entry(tok.as_ref().to_string()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&String, &u64)> = counts
            .iter()
            .filter(|(t, &c)| c >= min_count && t.as_str() != PAD && t.as_str() != UNK)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let tokens: Vec<String> = [PAD.to_string(), UNK.to_string()]
            .into_iter()
            .chain(kept.into_iter().map(|(t, _)| t.clone()))
            .collect();
        Self::from_parts(tokens, counts)
    }

    /// Rebuilds a vocabulary from an explicit id-ordered token list.
    pub fn from_parts(tokens: Vec<String>, counts: HashMap<String, u64>) -> Self {
        assert!(tokens.len() >= 2 && tokens[PAD_ID] == PAD && tokens[UNK_ID] == UNK, "reserved ids missing");
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let total = counts.values().sum();
        Vocabulary {
            tokens,
            ids,
            counts,
            total,
        }
    }

    /// Restores the lookup index after deserialisation.
    pub fn reindex(&mut self) {
        self.ids = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &HashMap<String, u64> {
        &self.counts
    }

    pub fn total_count(&self) -> u64 {
        self.total
    }

    /// Unigram probability `count / total`, 0 for unseen tokens.
    pub fn probability(&self, token: &str) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(token) as f64 / self.total as f64
        }
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }
}
