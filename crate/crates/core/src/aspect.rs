//! Aspect-term extraction: a self-contained rule/lexicon part-of-speech
//! tagger plus a noun-phrase chunker.
//!
//! Aspect terms are the nouns and noun phrases of a tweet. Extraction runs
//! on the normalized-but-unfiltered token stream (determiners and
//! adjectives must still be in place for chunking); the extracted unigrams
//! are then filtered with the same stopword/length rules as the modeling
//! vocabulary so the two stay aligned.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::ingest::RawTweet;
use crate::preprocess::{tokenize, Normalizer, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Det,
    Pron,
    Prep,
    Conj,
    Num,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub word: String,
    pub tag: PosTag,
}

/// A noun chunk. `unigrams` holds the chunk's noun words (the countable
/// features); adjectives stay in `phrase` but are not counted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectTerm {
    pub source_doc: usize,
    pub phrase: String,
    pub unigrams: Vec<String>,
}

/// Word lists backing the tagger. `Default` loads the bundled files; each
/// list is one word per line and can be overridden from disk.
#[derive(Debug, Clone)]
pub struct TaggerLexicon {
    pub determiners: HashSet<String>,
    pub pronouns: HashSet<String>,
    pub prepositions: HashSet<String>,
    pub conjunctions: HashSet<String>,
    pub aux_verbs: HashSet<String>,
    pub adjectives: HashSet<String>,
    pub adverbs: HashSet<String>,
    pub verbs: HashSet<String>,
    pub nouns: HashSet<String>,
    pub interjections: HashSet<String>,
    pub number_words: HashSet<String>,
}

fn word_set(raw: &str) -> HashSet<String> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

impl Default for TaggerLexicon {
    fn default() -> Self {
        TaggerLexicon {
            determiners: word_set(include_str!("../data/lexicon/determiners.txt")),
            pronouns: word_set(include_str!("../data/lexicon/pronouns.txt")),
            prepositions: word_set(include_str!("../data/lexicon/prepositions.txt")),
            conjunctions: word_set(include_str!("../data/lexicon/conjunctions.txt")),
            aux_verbs: word_set(include_str!("../data/lexicon/aux_verbs.txt")),
            adjectives: word_set(include_str!("../data/lexicon/adjectives.txt")),
            adverbs: word_set(include_str!("../data/lexicon/adverbs.txt")),
            verbs: word_set(include_str!("../data/lexicon/verbs.txt")),
            nouns: word_set(include_str!("../data/lexicon/nouns.txt")),
            interjections: word_set(include_str!("../data/lexicon/interjections.txt")),
            number_words: word_set(include_str!("../data/lexicon/number_words.txt")),
        }
    }
}

const POSSESSIVES: &[&str] = &["my", "your", "his", "her", "its", "our", "their", "whose"];

/// Deterministic rule/lexicon tagger. Lookup order: closed classes, then
/// the open-class lexicons, then -ing disambiguation by left context, then
/// suffix heuristics, and finally a default of noun (tweets are noun-heavy
/// and unknown words are mostly entities).
pub struct PosTagger {
    lexicon: TaggerLexicon,
}

impl Default for PosTagger {
    fn default() -> Self {
        PosTagger {
            lexicon: TaggerLexicon::default(),
        }
    }
}

impl PosTagger {
    pub fn new(lexicon: TaggerLexicon) -> Self {
        PosTagger { lexicon }
    }

    pub fn tag(&self, tokens: &[String]) -> Vec<TaggedToken> {
        let mut out: Vec<TaggedToken> = Vec::with_capacity(tokens.len());
        for (i, word) in tokens.iter().enumerate() {
            let prev_word = if i > 0 { Some(tokens[i - 1].as_str()) } else { None };
            let prev_tag = out.last().map(|t| t.tag);
            let tag = self.tag_one(word, prev_word, prev_tag);
            out.push(TaggedToken {
                word: word.clone(),
                tag,
            });
        }
        out
    }

    fn tag_one(&self, word: &str, prev_word: Option<&str>, prev_tag: Option<PosTag>) -> PosTag {
        let lex = &self.lexicon;
        if lex.determiners.contains(word) {
            return PosTag::Det;
        }
        if lex.pronouns.contains(word) {
            return PosTag::Pron;
        }
        if lex.prepositions.contains(word) {
            return PosTag::Prep;
        }
        if lex.conjunctions.contains(word) {
            return PosTag::Conj;
        }
        if lex.aux_verbs.contains(word) {
            return PosTag::Verb;
        }
        if lex.interjections.contains(word) {
            return PosTag::Other;
        }
        if lex.adverbs.contains(word) {
            return PosTag::Adv;
        }
        if lex.nouns.contains(word) {
            return PosTag::Noun;
        }
        if lex.adjectives.contains(word) {
            return PosTag::Adj;
        }
        if lex.verbs.contains(word) {
            return PosTag::Verb;
        }
        if word.chars().all(|c| c.is_ascii_digit()) || lex.number_words.contains(word) {
            return PosTag::Num;
        }
        if word.len() >= 5 && word.ends_with("ing") {
            // Gerund/participle split by left context: "more online shopping"
            // reads as a noun, "for making" as a verb.
            let noun_context = matches!(prev_tag, Some(PosTag::Adj) | Some(PosTag::Det))
                || prev_word.is_some_and(|w| {
                    POSSESSIVES.contains(&w) || w == "more" || w == "of"
                });
            if noun_context {
                return PosTag::Noun;
            }
            let verb_context = matches!(prev_tag, Some(PosTag::Prep) | Some(PosTag::Pron))
                || prev_word.is_some_and(|w| lex.aux_verbs.contains(w));
            if verb_context {
                return PosTag::Verb;
            }
            return PosTag::Verb;
        }
        if word.len() >= 5 && word.ends_with("ly") {
            return PosTag::Adv;
        }
        const NOUN_SUFFIXES: &[&str] = &["tion", "ment", "ness", "ity", "ship", "ism"];
        if NOUN_SUFFIXES.iter().any(|s| word.len() > s.len() + 1 && word.ends_with(s)) {
            return PosTag::Noun;
        }
        if word.len() >= 4 && word.ends_with("ed") {
            return PosTag::Verb;
        }
        const ADJ_SUFFIXES: &[&str] = &["ous", "ful", "ive", "al", "ic"];
        if word.len() >= 6 && word.ends_with("able") {
            return PosTag::Adj;
        }
        if ADJ_SUFFIXES.iter().any(|s| word.len() > s.len() + 1 && word.ends_with(s)) {
            return PosTag::Adj;
        }
        PosTag::Noun
    }
}

fn default_tagger() -> &'static PosTagger {
    static TAGGER: OnceLock<PosTagger> = OnceLock::new();
    TAGGER.get_or_init(PosTagger::default)
}

/// Tag a token sequence with the bundled lexicon.
pub fn pos_tag(tokens: &[String]) -> Vec<TaggedToken> {
    default_tagger().tag(tokens)
}

/// Extractor that reuses one normalizer and tagger across a corpus.
pub struct AspectExtractor<'a> {
    normalizer: Normalizer,
    tagger: &'a PosTagger,
    cfg: &'a PipelineConfig,
}

impl<'a> AspectExtractor<'a> {
    pub fn new(cfg: &'a PipelineConfig) -> Self {
        AspectExtractor {
            normalizer: Normalizer::new(cfg),
            tagger: default_tagger(),
            cfg,
        }
    }

    pub fn with_tagger(cfg: &'a PipelineConfig, tagger: &'a PosTagger) -> Self {
        AspectExtractor {
            normalizer: Normalizer::new(cfg),
            tagger,
            cfg,
        }
    }

    /// Extract maximal `(ADJ|NOUN)* NOUN` chunks from one tweet. Runs of
    /// adjectives/nouns are trimmed back to their last noun; a chunk's
    /// countable unigrams are its noun words, minus anything the stopword
    /// or length rules would exclude from the vocabulary.
    pub fn extract(&self, doc_id: usize, text: &str) -> Vec<AspectTerm> {
        let normalized = self.normalizer.normalize(text);
        let tokens = tokenize(&normalized);
        let tagged = self.tagger.tag(&tokens);
        let mut terms = Vec::new();
        let mut run: Vec<&TaggedToken> = Vec::new();
        for tok in &tagged {
            if tok.tag == PosTag::Adj || tok.tag == PosTag::Noun {
                run.push(tok);
            } else {
                self.flush_run(doc_id, &mut run, &mut terms);
            }
        }
        self.flush_run(doc_id, &mut run, &mut terms);
        terms
    }

    fn flush_run(&self, doc_id: usize, run: &mut Vec<&TaggedToken>, terms: &mut Vec<AspectTerm>) {
        if let Some(last_noun) = run.iter().rposition(|t| t.tag == PosTag::Noun) {
            let chunk = &run[..=last_noun];
            let phrase = chunk
                .iter()
                .map(|t| t.word.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let unigrams: Vec<String> = chunk
                .iter()
                .filter(|t| t.tag == PosTag::Noun)
                .map(|t| t.word.clone())
                .filter(|w| w.chars().count() >= self.cfg.min_token_len)
                .filter(|w| !self.cfg.stopwords.contains(w))
                .collect();
            if !unigrams.is_empty() {
                terms.push(AspectTerm {
                    source_doc: doc_id,
                    phrase,
                    unigrams,
                });
            }
        }
        run.clear();
    }
}

/// One-off extraction for a single tweet (builds the normalizer each call;
/// prefer [`AspectExtractor`] or [`extract_corpus_aspects`] over a corpus).
pub fn extract_aspect_terms(doc_id: usize, text: &str, cfg: &PipelineConfig) -> Vec<AspectTerm> {
    AspectExtractor::new(cfg).extract(doc_id, text)
}

/// Extract aspect terms for every tweet, in doc-id order.
pub fn extract_corpus_aspects(tweets: &[RawTweet], cfg: &PipelineConfig) -> Vec<AspectTerm> {
    let extractor = AspectExtractor::new(cfg);
    let mut out = Vec::new();
    for t in tweets {
        out.extend(extractor.extract(t.id, &t.text));
    }
    out
}
