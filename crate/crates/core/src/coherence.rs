//! Topic coherence scoring and the K sweep used to pick the topic count.
//!
//! Two metrics ship: a document-co-occurrence UMass score and a CV-style
//! score built from NPMI context vectors over boolean sliding windows,
//! compared by cosine similarity (one-set segmentation).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::CleanDoc;
use crate::topicmodel::{self, BowDoc, ModelError, TrainConfig};

pub const DEFAULT_TOP_N: usize = 20;
pub const DEFAULT_WINDOW: usize = 110;
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// CV vectors are tracked with 64-bit word masks per window.
pub const MAX_TOP_WORDS: usize = 64;

#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error("coherence needs at least 2 top words, got {0}")]
    TooFewWords(usize),
    #[error("sliding window size must be >= 1")]
    InvalidWindow,
    #[error("top-word set larger than {MAX_TOP_WORDS} is not supported, got {0}")]
    TooManyWords(usize),
    #[error("no candidate topic counts given")]
    NoCandidates,
    #[error("candidate K={0}: {1}")]
    Train(usize, #[source] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceMetric {
    UMass,
    Cv,
}

impl std::fmt::Display for CoherenceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoherenceMetric::UMass => write!(f, "umass"),
            CoherenceMetric::Cv => write!(f, "cv"),
        }
    }
}

/// Outcome of a K sweep: the score curve, the argmax choice, and the
/// settings that produced it. The full curve is kept so the "end of rapid
/// growth" elbow reading stays available to the user.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub metric: CoherenceMetric,
    pub per_k: Vec<(usize, f64)>,
    pub chosen_k: usize,
    pub top_n: usize,
}

/// Mean over ordered pairs `i < j` of `log((D(w_i,w_j) + 1) / D(w_j))`,
/// where `D` counts documents containing the word(s). A zero `D(w_j)` is
/// floored at `epsilon`.
pub fn umass_coherence(
    top_words: &[String],
    corpus: &[CleanDoc],
    epsilon: f64,
) -> Result<f64, CoherenceError> {
    let n = top_words.len();
    if n < 2 {
        return Err(CoherenceError::TooFewWords(n));
    }
    let presence = doc_presence(top_words, corpus);
    let doc_count = |word: usize| presence.iter().filter(|&&m| m >> word & 1 == 1).count();
    let pair_count = |a: usize, b: usize| {
        presence
            .iter()
            .filter(|&&m| m >> a & 1 == 1 && m >> b & 1 == 1)
            .count()
    };
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let dj = doc_count(j) as f64;
            let dij = pair_count(i, j) as f64;
            sum += ((dij + 1.0) / dj.max(epsilon)).ln();
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

/// Per-document presence masks over the top-word set (bit `i` set when the
/// doc contains `top_words[i]`). Docs containing none are omitted.
fn doc_presence(top_words: &[String], corpus: &[CleanDoc]) -> Vec<u64> {
    let index: std::collections::HashMap<&str, usize> = top_words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let mut masks = Vec::new();
    for doc in corpus {
        let mut mask = 0u64;
        for tok in &doc.tokens {
            if let Some(&i) = index.get(tok.as_str()) {
                mask |= 1 << i;
            }
        }
        if mask != 0 {
            masks.push(mask);
        }
    }
    masks
}

/// CV-style coherence. Boolean windows of `window` tokens slide over each
/// document (a shorter document is one window); window frequencies
/// give `p(w)` and `p(w_i,w_j)`; each top word's NPMI vector against the
/// whole set is compared to the summed vector by cosine, and the score is
/// the mean cosine. Result lies in [-1, 1].
pub fn cv_coherence(
    top_words: &[String],
    corpus: &[CleanDoc],
    window: usize,
) -> Result<f64, CoherenceError> {
    let n = top_words.len();
    if n < 2 {
        return Err(CoherenceError::TooFewWords(n));
    }
    if n > MAX_TOP_WORDS {
        return Err(CoherenceError::TooManyWords(n));
    }
    if window == 0 {
        return Err(CoherenceError::InvalidWindow);
    }
    let (single, pair, total) = window_counts(top_words, corpus, window);
    let npmi = npmi_matrix(&single, &pair, total, n, DEFAULT_EPSILON);
    Ok(one_set_cosine_score(&npmi))
}

/// Count sliding windows containing each word and each word pair.
/// Returns (per-word counts, pair counts as an N x N upper triangle kept
/// symmetric, total window count).
fn window_counts(
    top_words: &[String],
    corpus: &[CleanDoc],
    window: usize,
) -> (Vec<u64>, Vec<Vec<u64>>, u64) {
    let n = top_words.len();
    let index: std::collections::HashMap<&str, usize> = top_words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let mut single = vec![0u64; n];
    let mut pair = vec![vec![0u64; n]; n];
    let mut total = 0u64;
    for doc in corpus {
        if doc.tokens.is_empty() {
            continue;
        }
        let ids: Vec<Option<usize>> = doc
            .tokens
            .iter()
            .map(|t| index.get(t.as_str()).copied())
            .collect();
        let len = ids.len();
        let starts = if len <= window { 1 } else { len - window + 1 };
        for start in 0..starts {
            let end = (start + window).min(len);
            let mut mask = 0u64;
            for id in ids[start..end].iter().flatten() {
                mask |= 1 << id;
            }
            total += 1;
            if mask == 0 {
                continue;
            }
            let mut rest = mask;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                single[i] += 1;
                let mut rest2 = rest;
                while rest2 != 0 {
                    let j = rest2.trailing_zeros() as usize;
                    rest2 &= rest2 - 1;
                    pair[i][j] += 1;
                    pair[j][i] += 1;
                }
            }
        }
    }
    // A window containing w contains the pair (w, w).
    for i in 0..n {
        pair[i][i] = single[i];
    }
    (single, pair, total)
}

/// `NPMI(w_i, w_j) = ln((p_ij + eps) / (p_i * p_j)) / (-ln(p_ij + eps))`,
/// with a zero product in the denominator floored at `eps`.
fn npmi_matrix(
    single: &[u64],
    pair: &[Vec<u64>],
    total: u64,
    n: usize,
    eps: f64,
) -> Vec<Vec<f64>> {
    let total = total as f64;
    let p = |c: u64| c as f64 / total;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let pij = p(pair[i][j]);
            let denom = (p(single[i]) * p(single[j])).max(eps);
            let ratio = (pij + eps) / denom;
            m[i][j] = ratio.ln() / -(pij + eps).ln();
        }
    }
    m
}

fn one_set_cosine_score(npmi: &[Vec<f64>]) -> f64 {
    let n = npmi.len();
    let mut sum_vec = vec![0.0; n];
    for row in npmi {
        for (s, &v) in sum_vec.iter_mut().zip(row) {
            *s += v;
        }
    }
    let mut acc = 0.0;
    for row in npmi {
        acc += cosine(row, &sum_vec);
    }
    acc / n as f64
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Settings for one sweep candidate training run.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub metric: CoherenceMetric,
    pub top_n: usize,
    pub window: usize,
    pub epsilon: f64,
    pub train: TrainConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            metric: CoherenceMetric::Cv,
            top_n: DEFAULT_TOP_N,
            window: DEFAULT_WINDOW,
            epsilon: DEFAULT_EPSILON,
            train: TrainConfig::default(),
        }
    }
}

/// Mean coherence over a model's topics.
pub fn mean_topic_coherence(
    model: &topicmodel::LdaModel,
    docs: &[CleanDoc],
    cfg: &SweepConfig,
) -> Result<f64, CoherenceError> {
    let mut sum = 0.0;
    for k in 0..model.num_topics {
        let top: Vec<String> = model
            .top_words(k, cfg.top_n.min(model.vocab.len()))
            .into_iter()
            .map(str::to_string)
            .collect();
        let score = match cfg.metric {
            CoherenceMetric::UMass => umass_coherence(&top, docs, cfg.epsilon)?,
            CoherenceMetric::Cv => cv_coherence(&top, docs, cfg.window)?,
        };
        sum += score;
    }
    Ok(sum / model.num_topics as f64)
}

/// Train one model per candidate K (same corpus, same seed), score each by
/// mean topic coherence, and pick the argmax (ties go to the smaller K).
pub fn sweep_k(
    docs: &[CleanDoc],
    corpus: &[BowDoc],
    vocab: &topicmodel::Vocabulary,
    k_candidates: &[usize],
    cfg: &SweepConfig,
) -> Result<CoherenceReport, CoherenceError> {
    if k_candidates.is_empty() {
        return Err(CoherenceError::NoCandidates);
    }
    let mut per_k = Vec::with_capacity(k_candidates.len());
    for &k in k_candidates {
        let mut train = cfg.train.clone();
        train.num_topics = k;
        let model =
            topicmodel::train_lda(corpus, vocab, &train).map_err(|e| CoherenceError::Train(k, e))?;
        let score = mean_topic_coherence(&model, docs, cfg)?;
        per_k.push((k, score));
    }
    per_k.sort_by_key(|&(k, _)| k);
    let chosen_k = choose_k(&per_k);
    Ok(CoherenceReport {
        metric: cfg.metric,
        per_k,
        chosen_k,
        top_n: cfg.top_n,
    })
}

/// Argmax over an ascending-K curve; a tie keeps the smaller K.
fn choose_k(per_k: &[(usize, f64)]) -> usize {
    let mut best = per_k[0];
    for &(k, s) in &per_k[1..] {
        if s > best.1 {
            best = (k, s);
        }
    }
    best.0
}
