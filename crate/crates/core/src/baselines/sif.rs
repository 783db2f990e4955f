use std::collections::HashMap;
use std::io::BufRead;

use crate::text::{EmbeddingTable, Vocabulary};
use crate::{Error, Result};

/// Default SIF smoothing constant.
pub const DEFAULT_SIF_A: f64 = 1e-3;

/// Unigram probabilities `p(w) = count(w) / total`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WordFrequencies {
    counts: HashMap<String, u64>,
    total: u64,
}

impl WordFrequencies {
    pub fn from_counts(counts: HashMap<String, u64>) -> Self {
        let total = counts.values().sum();
        WordFrequencies { counts, total }
    }

    pub fn from_vocab(vocab: &Vocabulary) -> Self {
        Self::from_counts(vocab.counts().clone())
    }

    /// Reads `token count` lines.
    pub fn parse<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut counts = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::format(source, i + 1, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(tok), Some(n), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::format(source, i + 1, "expected `token count`"));
            };
            let n: u64 = n
                .parse()
                .map_err(|_| Error::format(source, i + 1, format!("count `{n}` is not a non-negative integer")))?;
            *counts.entry(tok.to_string()).or_insert(0) += n;
        }
        Ok(Self::from_counts(counts))
    }

    pub fn probability(&self, token: &str) -> f64 {
        match (self.counts.get(token), self.total) {
            (Some(&c), t) if t > 0 => c as f64 / t as f64,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SifConfig {
    pub a: f64,
}

impl Default for SifConfig {
    fn default() -> Self {
        SifConfig { a: DEFAULT_SIF_A }
    }
}

/// `a / (a + p)`: in (0, 1], strictly decreasing in `p`.
pub fn sif_weight(a: f64, p: f64) -> f64 {
    a / (a + p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SifVector {
    pub values: Vec<f64>,
    /// The sentence had no tokens; `values` is all zeros.
    pub empty: bool,
}

/// Frequency-weighted mean of word vectors. Words outside `vocab` use the
/// UNK row; their probability is whatever `freqs` says (0 if unseen).
pub fn sif_embed<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    freqs: &WordFrequencies,
    cfg: &SifConfig,
) -> SifVector {
    let mut values = vec![0.0; table.dim];
    if tokens.is_empty() {
        return SifVector { values, empty: true };
    }
    for t in tokens {
        let t = t.as_ref();
        let w = sif_weight(cfg.a, freqs.probability(t));
        for (v, e) in values.iter_mut().zip(table.row(vocab.id(t))) {
            *v += w * e;
        }
    }
    let n = tokens.len() as f64;
    values.iter_mut().for_each(|v| *v /= n);
    SifVector { values, empty: false }
}

/// Unit top right-singular vector of the (uncentered) training matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalComponent {
    pub u: Vec<f64>,
}

/// Convergence tolerance of the power iteration.
pub const PC_TOLERANCE: f64 = 1e-9;
const PC_MAX_ITERS: usize = 100_000;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Fits the first principal component by power iteration on `XᵀX`.
pub fn remove_first_pc(train: &[Vec<f64>]) -> Result<PrincipalComponent> {
    if train.len() < 2 {
        return Err(Error::Invalid("principal component removal needs at least two vectors".into()));
    }
    let d = train[0].len();
    if train.iter().any(|v| v.len() != d) {
        return Err(Error::contract("training vectors differ in dimension"));
    }
    let apply = |u: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for x in train {
            let s = dot(x, u);
            for (o, xi) in out.iter_mut().zip(x) {
                *o += s * xi;
            }
        }
        out
    };
    // start from the largest row, nudged so it is never exactly orthogonal
    // to the leading direction by construction
    let mut u = train
        .iter()
        .max_by(|a, b| dot(a, a).total_cmp(&dot(b, b)))
        .expect("non-empty")
        .clone();
    if normalize(&mut u) == 0.0 {
        return Err(Error::Invalid("all training vectors are zero".into()));
    }
    for (i, x) in u.iter_mut().enumerate() {
        *x += 1e-3 / (i + 2) as f64;
    }
    normalize(&mut u);
    for _ in 0..PC_MAX_ITERS {
        let mut next = apply(&u);
        if normalize(&mut next) == 0.0 {
            return Err(Error::Invalid("power iteration collapsed to zero".into()));
        }
        let delta = next.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        u = next;
        if delta < PC_TOLERANCE {
            break;
        }
    }
    Ok(PrincipalComponent { u })
}

impl PrincipalComponent {
    /// `v - u (uᵀ v)`.
    pub fn remove(&self, v: &[f64]) -> Vec<f64> {
        let s = dot(&self.u, v);
        v.iter().zip(&self.u).map(|(x, u)| x - s * u).collect()
    }
}
