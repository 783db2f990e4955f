use claimx_core::baselines::{rule_based_extract, RuleSet};
use claimx_core::text::tokenize;

#[test]
fn default_rules_match_golden_file() {
    let rules = RuleSet::default_rules();
    let golden = include_str!("fixtures/rule_sentences.tsv");
    let mut checked = (0, 0);
    for line in golden.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let (expected, sentence) = line.split_once('\t').expect("tab-separated");
        let expected = expected == "1";
        let got = rule_based_extract(&tokenize(sentence), &rules);
        assert_eq!(got, expected, "{sentence}");
        if expected {
            checked.0 += 1;
        } else {
            checked.1 += 1;
        }
    }
    assert_eq!(checked, (10, 10));
}
