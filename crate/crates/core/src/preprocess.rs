//! The ten-step tweet cleaning pipeline plus tokenization.
//!
//! Step order is fixed: (1) lowercase, (2) strip URLs, (3) strip @mentions,
//! (4) strip #hashtags (whole token), (5) expand contractions, (6) map
//! punctuation/symbols/digits to spaces, (7) collapse and trim whitespace,
//! then after tokenization (8) drop tokens shorter than the minimum length
//! and (9) drop stopwords. Step (10) handles non-ASCII content either by
//! stripping the characters or by dropping the whole tweet, per policy.
//! Contraction expansion has to run before punctuation removal, otherwise
//! the apostrophes are already gone.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::ingest::RawTweet;

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const BUNDLED_CONTRACTIONS: &str = include_str!("../data/contractions.tsv");

/// What to do with a tweet that still contains non-ASCII characters after
/// steps 1-7 (escape artifacts, non-English script, emoji remnants).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonAsciiPolicy {
    /// Remove the offending characters, keep the tweet.
    StripChars,
    /// Remove the whole tweet from the corpus.
    DropTweet,
}

/// Cleaning parameters. `Default` loads the bundled stopword and
/// contraction tables.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub stopwords: HashSet<String>,
    /// Ordered `pattern -> expansion` pairs, patterns lowercase.
    pub contractions: Vec<(String, String)>,
    pub min_token_len: usize,
    pub min_tokens_keep: usize,
    pub non_ascii_policy: NonAsciiPolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stopwords: parse_stopwords(BUNDLED_STOPWORDS),
            contractions: parse_contractions(BUNDLED_CONTRACTIONS),
            min_token_len: 2,
            min_tokens_keep: 1,
            non_ascii_policy: NonAsciiPolicy::StripChars,
        }
    }
}

impl PipelineConfig {
    pub fn with_stopwords_file(mut self, path: &Path) -> std::io::Result<Self> {
        self.stopwords = parse_stopwords(&std::fs::read_to_string(path)?);
        Ok(self)
    }

    pub fn with_contractions_file(mut self, path: &Path) -> std::io::Result<Self> {
        self.contractions = parse_contractions(&std::fs::read_to_string(path)?);
        Ok(self)
    }
}

/// One entry per line; blank lines and `#` comments ignored.
pub fn parse_stopwords(raw: &str) -> HashSet<String> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

/// `pattern<TAB>expansion` per line.
pub fn parse_contractions(raw: &str) -> Vec<(String, String)> {
    raw.lines()
        .filter_map(|l| {
            let l = l.trim_end();
            if l.is_empty() || l.starts_with('#') {
                return None;
            }
            let (pat, exp) = l.split_once('\t')?;
            Some((pat.trim().to_lowercase(), exp.trim().to_string()))
        })
        .collect()
}

/// A tweet after cleaning. `dropped` marks tweets removed entirely (step 10
/// under the drop policy, or emptied below `min_tokens_keep`); dropped docs
/// keep their slot so ids stay aligned with the raw dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanDoc {
    pub id: usize,
    pub tokens: Vec<String>,
    pub dropped: bool,
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Every alternative requires a separator that step 6 would erase, so the
    // rule is a no-op on already-normalized text (idempotence).
    RE.get_or_init(|| Regex::new(r"(?:http\S*[./:\u{2026}]\S*|www\.\S+|t\.co/\S+)").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#\w+").unwrap())
}

/// Compiled form of the normalization rules for one [`PipelineConfig`].
/// Build it once when cleaning a whole corpus.
pub struct Normalizer {
    contraction_re: Option<Regex>,
    expansions: std::collections::HashMap<String, String>,
    policy: NonAsciiPolicy,
}

impl Normalizer {
    pub fn new(cfg: &PipelineConfig) -> Self {
        // Longest pattern first so e.g. "can't've" wins over "can't".
        let mut patterns: Vec<&str> = cfg.contractions.iter().map(|(p, _)| p.as_str()).collect();
        patterns.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        let contraction_re = if patterns.is_empty() {
            None
        } else {
            let alternation = patterns
                .iter()
                .map(|p| regex::escape(p))
                .collect::<Vec<_>>()
                .join("|");
            Some(Regex::new(&format!(r"\b(?:{alternation})\b")).unwrap())
        };
        Normalizer {
            contraction_re,
            expansions: cfg.contractions.iter().cloned().collect(),
            policy: cfg.non_ascii_policy,
        }
    }

    /// Steps 1-7. Returns the cleaned text plus whether any non-ASCII
    /// character survived into it (the step-10 trigger).
    fn normalize_to_step7(&self, text: &str) -> (String, bool) {
        let mut s = text.to_lowercase();
        s = url_re().replace_all(&s, "").into_owned();
        s = mention_re().replace_all(&s, "").into_owned();
        s = hashtag_re().replace_all(&s, "").into_owned();
        // Typographic apostrophes appear constantly in tweets; fold them so
        // the contraction table matches.
        if s.contains('\u{2019}') {
            s = s.replace('\u{2019}', "'");
        }
        if let Some(re) = &self.contraction_re {
            s = re
                .replace_all(&s, |caps: &regex::Captures| {
                    self.expansions[&caps[0]].clone()
                })
                .into_owned();
        }
        let mapped: String = s
            .chars()
            .map(|c| {
                if c.is_alphabetic() || c.is_whitespace() {
                    c
                } else {
                    ' '
                }
            })
            .collect();
        let collapsed = mapped.split_whitespace().collect::<Vec<_>>().join(" ");
        let has_non_ascii = !collapsed.is_ascii();
        (collapsed, has_non_ascii)
    }

    /// Full normalization, steps 1-7 and 10. Total: never fails, output is
    /// lowercase ASCII. Under either policy the returned string has
    /// non-ASCII characters removed; the drop decision is taken by
    /// [`preprocess_corpus`] from the flag.
    pub fn normalize_with_flag(&self, text: &str) -> (String, bool) {
        let (step7, has_non_ascii) = self.normalize_to_step7(text);
        if !has_non_ascii {
            return (step7, false);
        }
        let stripped: String = step7.chars().filter(|c| c.is_ascii()).collect();
        let collapsed = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
        (collapsed, true)
    }

    pub fn normalize(&self, text: &str) -> String {
        self.normalize_with_flag(text).0
    }

    pub fn policy(&self) -> NonAsciiPolicy {
        self.policy
    }
}

/// One-off normalization (builds the rule set each call; prefer
/// [`Normalizer`] over a corpus).
pub fn normalize_text(text: &str, cfg: &PipelineConfig) -> String {
    Normalizer::new(cfg).normalize(text)
}

/// Whitespace split, order preserved.
pub fn tokenize(normalized: &str) -> Vec<String> {
    normalized.split_whitespace().map(str::to_string).collect()
}

/// Steps 8-9: drop tokens below the minimum length, then stopwords.
pub fn filter_tokens(tokens: Vec<String>, cfg: &PipelineConfig) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| t.chars().count() >= cfg.min_token_len)
        .filter(|t| !cfg.stopwords.contains(t))
        .collect()
}

/// Clean a whole corpus. Output order and length match the input; docs that
/// fall below `min_tokens_keep` tokens (or that trip the drop policy) come
/// back with `dropped = true` and no tokens.
pub fn preprocess_corpus(tweets: &[RawTweet], cfg: &PipelineConfig) -> Vec<CleanDoc> {
    let normalizer = Normalizer::new(cfg);
    tweets
        .iter()
        .map(|t| {
            let (normalized, had_non_ascii) = normalizer.normalize_with_flag(&t.text);
            if had_non_ascii && cfg.non_ascii_policy == NonAsciiPolicy::DropTweet {
                return CleanDoc {
                    id: t.id,
                    tokens: Vec::new(),
                    dropped: true,
                };
            }
            let tokens = filter_tokens(tokenize(&normalized), cfg);
            if tokens.len() < cfg.min_tokens_keep {
                CleanDoc {
                    id: t.id,
                    tokens: Vec::new(),
                    dropped: true,
                }
            } else {
                CleanDoc {
                    id: t.id,
                    tokens,
                    dropped: false,
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PipelineConfig {
        PipelineConfig::default()
    }

    fn norm(s: &str) -> String {
        normalize_text(s, &cfg())
    }

    #[test]
    fn strips_mentions_urls_hashtags() {
        assert_eq!(norm("Hi @john see https://t.co/xyz #Covid19 NOW"), "hi see now");
    }

    #[test]
    fn expands_contractions() {
        assert_eq!(norm("can't won't I'm"), "cannot will not i am");
        assert_eq!(norm("don\u{2019}t panic"), "do not panic");
        assert_eq!(norm("can't've known"), "cannot have known");
    }

    #[test]
    fn strip_chars_policy_removes_non_ascii() {
        assert_eq!(norm("caf\u{00e9} \u{018e} ok"), "caf ok");
    }

    #[test]
    fn punctuation_and_digits_become_spaces() {
        assert_eq!(norm("price; hits $26.20 -- covid19!"), "price hits covid");
    }

    #[test]
    fn whitespace_collapsed_and_trimmed() {
        assert_eq!(norm("  a \t b \n c  "), "a b c");
    }

    #[test]
    fn tokenize_basics() {
        assert_eq!(tokenize("hi see now"), vec!["hi", "see", "now"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("  a  b "), vec!["a", "b"]);
    }

    #[test]
    fn filter_removes_short_tokens_and_stopwords() {
        let toks = ["i", "x", "go", "the", "store"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(filter_tokens(toks, &cfg()), vec!["go", "store"]);
        assert!(filter_tokens(Vec::new(), &cfg()).is_empty());
        let toks = ["coronavirus", "is", "a", "virus"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(filter_tokens(toks, &cfg()), vec!["coronavirus", "virus"]);
    }

    #[test]
    fn golden_tweet_from_sample_corpus() {
        let tweets = vec![RawTweet {
            id: 0,
            text: "Hi coronavirus. Thanks for making me do more online shopping.".into(),
            meta: None,
        }];
        let docs = preprocess_corpus(&tweets, &cfg());
        assert_eq!(
            docs[0].tokens,
            vec!["hi", "coronavirus", "thanks", "making", "online", "shopping"]
        );
        assert!(!docs[0].dropped);
    }

    #[test]
    fn url_only_tweet_is_dropped() {
        let tweets = vec![RawTweet {
            id: 0,
            text: "https://t.co/abc".into(),
            meta: None,
        }];
        let docs = preprocess_corpus(&tweets, &cfg());
        assert!(docs[0].dropped);
        assert!(docs[0].tokens.is_empty());
    }

    #[test]
    fn drop_tweet_policy_drops_non_english() {
        let mut c = cfg();
        c.non_ascii_policy = NonAsciiPolicy::DropTweet;
        let tweets = vec![
            RawTweet {
                id: 0,
                text: "totally fine text".into(),
                meta: None,
            },
            RawTweet {
                id: 1,
                text: "\u{018e} weird bytes here".into(),
                meta: None,
            },
        ];
        let docs = preprocess_corpus(&tweets, &c);
        assert!(!docs[0].dropped);
        assert!(docs[1].dropped);
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[1].id, 1);
    }

    #[test]
    fn deterministic_across_runs() {
        let tweets = vec![RawTweet {
            id: 0,
            text: "Some #tag and a link http://x.y".into(),
            meta: None,
        }];
        assert_eq!(
            preprocess_corpus(&tweets, &cfg()),
            preprocess_corpus(&tweets, &cfg())
        );
    }

    proptest::proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC*") {
            let c = cfg();
            let n = Normalizer::new(&c);
            let once = n.normalize(&s);
            let twice = n.normalize(&once);
            proptest::prop_assert_eq!(once, twice);
        }

        #[test]
        fn output_tokens_match_charset(s in "\\PC*") {
            let c = cfg();
            let tweets = vec![RawTweet { id: 0, text: s, meta: None }];
            let docs = preprocess_corpus(&tweets, &c);
            for tok in &docs[0].tokens {
                proptest::prop_assert!(tok.len() >= 2);
                proptest::prop_assert!(tok.bytes().all(|b| b.is_ascii_lowercase()));
                proptest::prop_assert!(!c.stopwords.contains(tok));
            }
        }
    }
}
