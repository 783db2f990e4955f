use unicode_normalization::UnicodeNormalization;

/// Lowercased tokens that end with a period but do not end a sentence.
/// Multi-word entries are matched against the words preceding the period.
pub const ABBREVIATIONS: &[&str] = &[
    "al", "approx", "ca", "cf", "dr", "e.g", "eq", "eqs", "et al", "etc", "fig", "figs", "i.e", "inc", "max", "min",
    "mr", "mrs", "ms", "no", "nos", "prof", "ref", "refs", "resp", "sec", "st", "suppl", "tab", "viz", "vol", "vs",
];

/// A sentence as a byte range of the NFC-normalised source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Rule-based sentence splitter.
///
/// Input is NFC-normalised first; spans index into the normalised text. A
/// boundary is a run of `.`, `?` or `!` (plus trailing closing quotes or
/// brackets) followed by whitespace, unless the period closes a known
/// abbreviation or a single-letter initial, or the next word starts with a
/// lowercase letter.
pub fn split_sentences(text: &str) -> Vec<SentenceSpan> {
    let text: String = text.nfc().collect();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if start.is_none() && !c.is_whitespace() {
            start = Some(pos);
        }
        if matches!(c, '.' | '?' | '!') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '?' | '!' | '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}') {
                j += 1;
            }
            let at_end = j == chars.len();
            let followed_by_space = at_end || chars[j].1.is_whitespace();
            if followed_by_space && (at_end || is_boundary(&text, &chars, i, j)) {
                let s = start.take().expect("sentence start");
                let end = if at_end { text.len() } else { chars[j].0 };
                spans.push(SentenceSpan {
                    start: s,
                    end,
                    text: text[s..end].to_string(),
                });
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        let end = text.trim_end().len();
        if end > s {
            spans.push(SentenceSpan {
                start: s,
                end,
                text: text[s..end].to_string(),
            });
        }
    }
    spans
}

fn is_boundary(text: &str, chars: &[(usize, char)], punct: usize, after: usize) -> bool {
    let next = chars[after..].iter().map(|&(_, c)| c).find(|c| !c.is_whitespace());
    if matches!(next, Some(c) if c.is_lowercase()) {
        return false;
    }
    if chars[punct].1 != '.' {
        return true;
    }
    let before = &text[..chars[punct].0];
    let word_start = before
        .rfind(|c: char| c.is_whitespace() || c == '(' || c == '[')
        .map_or(0, |p| p + 1);
    let word = before[word_start..].to_lowercase();
    if word.chars().count() == 1 && word.chars().all(char::is_alphabetic) {
        return false;
    }
    if ABBREVIATIONS.contains(&word.as_str()) {
        return false;
    }
    // two-word abbreviations such as "et al"
    let prev = before[..word_start].trim_end();
    let prev_start = prev.rfind(char::is_whitespace).map_or(0, |p| p + 1);
    let pair = format!("{} {}", prev[prev_start..].to_lowercase(), word);
    !ABBREVIATIONS.contains(&pair.as_str())
}
