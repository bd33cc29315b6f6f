//! Tokenization, vocabularies and area-term stripping.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read};
use std::ops::Deref;

use crate::error::{Error, Result};

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

/// Ordered lowercase tokens. No token is empty, contains whitespace, starts
/// with `#` or `@`, or looks like a URL.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenList {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

fn is_url(s: &str) -> bool {
    URL_PREFIXES.iter().any(|p| s.starts_with(p))
}

fn token_from_piece(piece: &str) -> Option<String> {
    let piece = piece.to_lowercase();
    let head = piece.trim_start_matches(|c: char| !c.is_alphanumeric() && c != '#' && c != '@');
    if is_url(head) || head.starts_with('@') {
        return None;
    }
    let word = head
        .trim_start_matches('#')
        .trim_matches(|c: char| !c.is_alphanumeric());
    if word.is_empty() || is_url(word) {
        return None;
    }
    Some(word.to_string())
}

/// Lowercase, drop URLs and @mentions, keep hashtag words without `#`,
/// split on whitespace and trim surrounding punctuation.
pub fn tokenize(text: &str) -> TokenList {
    TokenList(
        text.split_whitespace()
            .filter_map(token_from_piece)
            .collect(),
    )
}

/// Remove every token found in `blocklist`.
pub fn strip_area_terms(tokens: &TokenList, blocklist: &BTreeSet<String>) -> TokenList {
    TokenList(
        tokens
            .iter()
            .filter(|t| !blocklist.contains(t.as_str()))
            .cloned()
            .collect(),
    )
}

/// One lowercase term per line; blank lines and `#` comments are ignored.
pub fn read_blocklist<R: Read>(source: R) -> Result<BTreeSet<String>> {
    let mut terms = BTreeSet::new();
    for line in BufReader::new(source).lines() {
        let line = line?;
        let term = line.trim();
        if term.is_empty() || term.starts_with('#') {
            continue;
        }
        terms.insert(term.to_lowercase());
    }
    Ok(terms)
}

/// Token → column index, assigned in lexicographic token order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    index: BTreeMap<String, usize>,
    counts: BTreeMap<String, usize>,
    min_freq: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn count(&self, token: &str) -> Option<usize> {
        self.counts.get(token).copied()
    }

    /// Tokens in index order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        // BTreeMap iterates in key order, which is the index order.
        self.index.keys().map(String::as_str)
    }

    /// `(token, corpus count)` pairs in index order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(t, c)| (t.as_str(), *c))
    }

    /// Rebuild from stored `(token, count)` pairs, e.g. when loading a saved model.
    pub fn from_counts<I>(entries: I, min_freq: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (String, usize)>,
    {
        let mut counts = BTreeMap::new();
        for (tok, c) in entries {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Format {
                    what: "vocabulary",
                    reason: format!("invalid token {tok:?}"),
                });
            }
            if c < min_freq {
                return Err(Error::Format {
                    what: "vocabulary",
                    reason: format!("token {tok:?} has count {c} below min_freq {min_freq}"),
                });
            }
            if counts.insert(tok.clone(), c).is_some() {
                return Err(Error::Format {
                    what: "vocabulary",
                    reason: format!("duplicate token {tok:?}"),
                });
            }
        }
        Ok(Self::index_counts(counts, min_freq))
    }

    fn index_counts(counts: BTreeMap<String, usize>, min_freq: usize) -> Self {
        let index = counts
            .keys()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            index,
            counts,
            min_freq,
        }
    }
}

/// Keep tokens whose corpus frequency is at least `min_freq`.
pub fn build_vocabulary<'a, I>(docs: I, min_freq: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a TokenList>,
{
    if min_freq == 0 {
        return Err(Error::InvalidConfig("min_freq must be at least 1".into()));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        for tok in doc.iter() {
            *counts.entry(tok.clone()).or_default() += 1;
        }
    }
    counts.retain(|_, c| *c >= min_freq);
    Ok(Vocabulary::index_counts(counts, min_freq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> TokenList {
        TokenList(words.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn tokenizes_the_rockport_tweet() {
        let got = tokenize(
            "Rockport getting bad & it's just the start of the storm, don't underestimate #Harvey",
        );
        assert_eq!(
            got,
            toks(&[
                "rockport",
                "getting",
                "bad",
                "it's",
                "just",
                "the",
                "start",
                "of",
                "the",
                "storm",
                "don't",
                "underestimate",
                "harvey"
            ])
        );
    }

    #[test]
    fn noise_only_text_is_empty() {
        assert!(tokenize("https://t.co/xyz @NWS").is_empty());
        assert!(tokenize("").is_empty());
        assert!(tokenize(" (www.example.com) @a, & ... ").is_empty());
        assert_eq!(tokenize("#www.example.com #Irma!!"), toks(&["irma"]));
    }

    #[test]
    fn vocabulary_respects_min_freq() {
        let docs = vec![toks(&["storm", "storm"]), toks(&["surge"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.get("storm"), Some(0));
        assert_eq!(v.get("surge"), Some(1));
        let v2 = build_vocabulary(&docs, 2).unwrap();
        assert_eq!(v2.tokens().collect::<Vec<_>>(), vec!["storm"]);
        assert!(build_vocabulary(&Vec::<TokenList>::new(), 1)
            .unwrap()
            .is_empty());
        assert!(build_vocabulary(&docs, 0).is_err());
    }

    #[test]
    fn from_counts_round_trips() {
        let docs = vec![toks(&["b", "a", "a"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        let back =
            Vocabulary::from_counts(v.entries().map(|(t, c)| (t.to_string(), c)), v.min_freq())
                .unwrap();
        assert_eq!(back, v);
        assert!(Vocabulary::from_counts([("x".to_string(), 1)], 2).is_err());
    }

    #[test]
    fn strips_area_terms() {
        let t = toks(&["flooding", "in", "texas", "houston", "harvey"]);
        let block: BTreeSet<String> = ["texas", "houston", "harvey"].map(String::from).into();
        assert_eq!(strip_area_terms(&t, &block), toks(&["flooding", "in"]));
        assert_eq!(strip_area_terms(&t, &BTreeSet::new()), t);
        let all: BTreeSet<String> = t.iter().cloned().collect();
        assert!(strip_area_terms(&t, &all).is_empty());
    }

    #[test]
    fn blocklist_file_skips_comments() {
        let b = read_blocklist("# places\nTexas\n\nhouston\n".as_bytes()).unwrap();
        assert_eq!(b, ["houston", "texas"].map(String::from).into());
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent_and_clean(s in "\\PC{0,80}") {
            let t = tokenize(&s);
            for tok in t.iter() {
                prop_assert!(!tok.is_empty());
                prop_assert!(!tok.chars().any(char::is_whitespace));
                prop_assert!(!tok.starts_with('#') && !tok.starts_with('@'));
                prop_assert!(!is_url(tok));
            }
            prop_assert_eq!(tokenize(&t.join()), t);
        }

        #[test]
        fn tokenize_is_idempotent_on_tweetlike_text(
            words in prop::collection::vec(
                prop_oneof!["[A-Za-z']{1,8}", "#[A-Za-z]{1,6}", "@[a-z]{1,5}",
                            "https?://[a-z./]{1,8}", "[,.!?&()]{1,2}", "www\\.[a-z]{1,4}"],
                0..15)
        ) {
            let t = tokenize(&words.join(" "));
            prop_assert_eq!(tokenize(&t.join()), t);
        }

        #[test]
        fn vocabulary_is_a_bijection(
            docs in prop::collection::vec(prop::collection::vec("[a-e]{1,2}", 0..6), 0..6),
            min_freq in 1usize..3,
        ) {
            let docs: Vec<TokenList> = docs.into_iter().map(TokenList).collect();
            let v = build_vocabulary(&docs, min_freq).unwrap();
            let mut seen: Vec<usize> = v.tokens().map(|t| v.get(t).unwrap()).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..v.len()).collect::<Vec<_>>());
            for (_, c) in v.entries() {
                prop_assert!(c >= min_freq);
            }
        }

        #[test]
        fn stripping_composes(
            t in prop::collection::vec("[a-d]", 0..10),
            b1 in prop::collection::btree_set("[a-d]", 0..3),
            b2 in prop::collection::btree_set("[a-d]", 0..3),
        ) {
            let t = TokenList(t);
            let union: BTreeSet<String> = b1.union(&b2).cloned().collect();
            prop_assert_eq!(
                strip_area_terms(&t, &union),
                strip_area_terms(&strip_area_terms(&t, &b1), &b2)
            );
        }
    }
}
