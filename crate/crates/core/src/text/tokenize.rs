/// Lowercased tokens: maximal runs of letters/digits, and every other
/// non-whitespace character as a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            word.extend(c.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            out.push(c.to_lowercase().collect());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixtures() {
        assert_eq!(tokenize("CRISPR/Cas works."), vec!["crispr", "/", "cas", "works", "."]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a b"), vec!["a", "b"]);
        assert_eq!(tokenize("IL-6 (p<0.05)"), vec!["il", "-", "6", "(", "p", "<", "0", ".", "05", ")"]);
    }

    proptest! {
        #[test]
        fn retokenising_joined_tokens_is_identity(s in "\\PC{0,60}") {
            let toks = tokenize(&s);
            prop_assert_eq!(tokenize(&toks.join(" ")), toks);
        }
    }
}
