use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Vocabulary, PAD_ID};
use crate::{Error, Result};

/// Out-of-vocabulary rows are drawn from `U(-bound, bound)`.
pub const OOV_INIT_BOUND: f64 = 0.05;

/// `V x dim` matrix aligned to vocabulary ids.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
    /// Fraction of non-reserved vocabulary tokens found in the file.
    pub coverage: f64,
}

impl EmbeddingTable {
    /// Seeded uniform table with a zero PAD row; used when no pretrained
    /// vectors are supplied.
    pub fn random(vocab_size: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..vocab_size)
            .map(|i| {
                if i == PAD_ID {
                    vec![0.0; dim]
                } else {
                    (0..dim).map(|_| rng.gen_range(-OOV_INIT_BOUND..OOV_INIT_BOUND)).collect()
                }
            })
            .collect();
        EmbeddingTable {
            dim,
            rows,
            coverage: 0.0,
        }
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.rows[id]
    }

    pub fn flat(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }
}

pub fn load_embeddings(path: &Path, vocab: &Vocabulary, seed: u64) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(BufReader::new(file), &path.display().to_string(), vocab, seed)
}

/// Parses GloVe-style text (`token v1 .. vD` per line). A leading `V D`
/// header line (word2vec text convention) is detected and skipped.
pub fn parse_embeddings<R: BufRead>(reader: R, source: &str, vocab: &Vocabulary, seed: u64) -> Result<EmbeddingTable> {
    let mut found: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
    let mut dim: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::format(source, lineno, e.to_string()))?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let token = fields.next().expect("non-empty line");
        let rest: Vec<&str> = fields.collect();
        if lineno == 1 && rest.len() == 1 && token.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        let values = rest
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::format(source, lineno, format!("unreadable float `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(Error::format(source, lineno, "token without vector"));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::format(
                    source,
                    lineno,
                    format!("expected {d} values, found {}", values.len()),
                ))
            }
            _ => {}
        }
        if vocab.contains(token) {
            let id = vocab.id(token);
            if found[id].is_none() {
                found[id] = Some(values);
            }
        }
    }
    let dim = dim.ok_or_else(|| Error::format(source, 0, "no embedding vectors found"))?;
    let mut table = EmbeddingTable::random(vocab.len(), dim, seed);
    let mut hits = 0usize;
    for (id, row) in found.into_iter().enumerate() {
        if let Some(v) = row {
            table.rows[id] = v;
            if id > super::UNK_ID {
                hits += 1;
            }
        }
    }
    let real = vocab.len().saturating_sub(2);
    table.coverage = if real == 0 { 0.0 } else { hits as f64 / real as f64 };
    Ok(table)
}
