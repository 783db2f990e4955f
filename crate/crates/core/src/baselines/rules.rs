use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::text::tokenize;
use crate::{Error, Result};

/// Largest number of tokens a `...` gap may skip.
pub const GAP_WINDOW: usize = 3;

const DEFAULT_RULES: &str = include_str!("../../rules/default.rules");

#[derive(Clone, Debug, PartialEq, Eq)]
enum Element {
    Word(String),
    Class(String),
    Any,
    Gap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    /// The rule's source text, for explanations.
    pub source: String,
    elements: Vec<Element>,
}

/// Keyword phrases and lexical patterns, matched within one sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    classes: BTreeMap<String, BTreeSet<String>>,
    rules: Vec<Rule>,
}

impl RuleSet {
    /// The shipped rule set.
    pub fn default_rules() -> Self {
        Self::parse(DEFAULT_RULES, "default.rules").expect("shipped rules parse")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut classes: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut pending = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fail = |m: String| Error::format(source, i + 1, m);
            let (kind, body) = line
                .split_once(':')
                .ok_or_else(|| fail("expected `keyword:`, `pattern:` or `class:`".into()))?;
            let body = body.trim();
            match kind.trim() {
                "class" => {
                    let (name, words) = body
                        .split_once('=')
                        .ok_or_else(|| fail("class lines look like `class: name = word word`".into()))?;
                    let words: BTreeSet<String> = words.split_whitespace().flat_map(tokenize).collect();
                    if words.is_empty() {
                        return Err(fail(format!("class `{}` has no words", name.trim())));
                    }
                    classes.entry(name.trim().to_string()).or_default().extend(words);
                }
                "keyword" => {
                    let elements: Vec<Element> = tokenize(body).into_iter().map(Element::Word).collect();
                    if elements.is_empty() {
                        return Err(fail("empty keyword".into()));
                    }
                    pending.push((i + 1, Rule { source: line.to_string(), elements }));
                }
                "pattern" => {
                    let mut elements = Vec::new();
                    for item in body.split_whitespace() {
                        match item {
                            "*" => elements.push(Element::Any),
                            "..." => elements.push(Element::Gap),
                            _ => match item.strip_prefix('@') {
                                Some(name) => elements.push(Element::Class(name.to_string())),
                                None => elements.extend(tokenize(item).into_iter().map(Element::Word)),
                            },
                        }
                    }
                    if !elements.iter().any(|e| matches!(e, Element::Word(_) | Element::Class(_))) {
                        return Err(fail("a pattern needs at least one word or class".into()));
                    }
                    pending.push((i + 1, Rule { source: line.to_string(), elements }));
                }
                other => return Err(fail(format!("unknown rule kind `{other}`"))),
            }
        }
        for (line, rule) in &pending {
            for e in &rule.elements {
                if let Element::Class(name) = e {
                    if !classes.contains_key(name) {
                        return Err(Error::format(source, *line, format!("undefined class `@{name}`")));
                    }
                }
            }
        }
        if pending.is_empty() {
            return Err(Error::Invalid(format!("{source}: a rule set needs at least one rule")));
        }
        Ok(RuleSet {
            classes,
            rules: pending.into_iter().map(|(_, r)| r).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// The first rule matching the tokenised sentence.
    pub fn first_match<S: AsRef<str>>(&self, tokens: &[S]) -> Option<&Rule> {
        let toks: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
        self.rules
            .iter()
            .find(|r| (0..toks.len()).any(|start| self.matches_at(&r.elements, &toks[start..])))
    }

    fn matches_at(&self, elements: &[Element], toks: &[&str]) -> bool {
        let Some((head, rest)) = elements.split_first() else {
            return true;
        };
        match head {
            Element::Gap => (0..=GAP_WINDOW.min(toks.len())).any(|skip| self.matches_at(rest, &toks[skip..])),
            _ => match toks.split_first() {
                Some((t, more)) => self.element_matches(head, t) && self.matches_at(rest, more),
                None => false,
            },
        }
    }

    fn element_matches(&self, e: &Element, token: &str) -> bool {
        match e {
            Element::Word(w) => w == token,
            Element::Class(c) => self.classes[c].contains(token),
            Element::Any => true,
            Element::Gap => unreachable!("gaps are handled by the matcher"),
        }
    }
}

/// True when any rule matches the sentence. Empty sentences never match.
pub fn rule_based_extract<S: AsRef<str>>(tokens: &[S], rules: &RuleSet) -> bool {
    rules.first_match(tokens).is_some()
}
