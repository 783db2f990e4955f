use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusStats {
    pub abstracts: usize,
    pub sentences: usize,
    pub claims: usize,
    pub last_sentence_claims: usize,
    /// `last_sentence_claims / claims`, 0 without claims.
    pub last_sentence_fraction: f64,
    /// Claims binned by relative position `(i + 1) / n` into deciles
    /// `(0, 0.1], (0.1, 0.2], ..., (0.9, 1.0]`.
    pub position_deciles: [usize; 10],
}

pub fn corpus_stats<'a>(labels: impl IntoIterator<Item = &'a [bool]>) -> CorpusStats {
    let mut s = CorpusStats {
        abstracts: 0,
        sentences: 0,
        claims: 0,
        last_sentence_claims: 0,
        last_sentence_fraction: 0.0,
        position_deciles: [0; 10],
    };
    for doc in labels {
        let n = doc.len();
        s.abstracts += 1;
        s.sentences += n;
        for (i, &c) in doc.iter().enumerate() {
            if !c {
                continue;
            }
            s.claims += 1;
            if i + 1 == n {
                s.last_sentence_claims += 1;
            }
            // integer arithmetic keeps exact decile edges exact
            let bin = ((i + 1) * 10).div_ceil(n).saturating_sub(1).min(9);
            s.position_deciles[bin] += 1;
        }
    }
    if s.claims > 0 {
        s.last_sentence_fraction = s.last_sentence_claims as f64 / s.claims as f64;
    }
    s
}

impl CorpusStats {
    /// Multi-line text rendering with one bar per decile.
    pub fn render(&self) -> String {
        let mut out = format!(
            "abstracts: {}\nsentences: {}\nclaims: {}\nclaims in last sentence: {} ({:.1}%)\nclaim position (relative):\n",
            self.abstracts,
            self.sentences,
            self.claims,
            self.last_sentence_claims,
            100.0 * self.last_sentence_fraction
        );
        let max = self.position_deciles.iter().copied().max().unwrap_or(0).max(1);
        for (i, &c) in self.position_deciles.iter().enumerate() {
            let bar = "#".repeat((c * 40).div_ceil(max));
            out.push_str(&format!("  {:.1}-{:.1} {:>6} {}\n", i as f64 / 10.0, (i + 1) as f64 / 10.0, c, bar));
        }
        out
    }
}
