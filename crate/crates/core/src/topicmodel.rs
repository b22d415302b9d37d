//! Dictionary/bag-of-words construction and LDA trained by collapsed Gibbs
//! sampling.
//!
//! Sampling integrates out the topic mixtures and resamples per-token topic
//! assignments from the count tables:
//!
//! ```text
//! p(z = k) ∝ (ndk + α_k) · (nkw + β) / (nk + V·β)
//! ```
//!
//! The scan order is fixed (documents in corpus order, token positions in
//! word-id order) and all randomness comes from one seeded ChaCha stream,
//! so training is bit-reproducible for a given `(corpus, config)`.

use std::collections::HashMap;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::CleanDoc;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("vocabulary is empty after document-frequency filtering")]
    EmptyVocabulary,
    #[error("corpus has no usable documents")]
    EmptyCorpus,
    #[error("invalid topic count {0}; need K >= 1")]
    InvalidTopicCount(usize),
    #[error("document {0} has no topic assignment (dropped or empty after preprocessing)")]
    UnassignableDoc(usize),
    #[error("model file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model file {path}: {source}")]
    Format {
        path: String,
        source: serde_json::Error,
    },
    #[error("model file {path}: format_version {found} unsupported (expected {expected})")]
    Version {
        path: String,
        found: u32,
        expected: u32,
    },
}

/// Dense word <-> id mapping with per-word document frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub id_to_word: Vec<String>,
    pub doc_freq: Vec<u32>,
    #[serde(skip)]
    word_to_id: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_parts(id_to_word: Vec<String>, doc_freq: Vec<u32>) -> Self {
        let word_to_id = id_to_word
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary {
            id_to_word,
            doc_freq,
            word_to_id,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_word.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.id_to_word[id]
    }
}

/// Sparse token counts for one document; pairs sorted by word id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowDoc {
    pub doc_id: usize,
    pub counts: Vec<(usize, u32)>,
}

impl BowDoc {
    pub fn token_count(&self) -> usize {
        self.counts.iter().map(|&(_, c)| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Keep words whose document frequency lies in `[min_df, max_df_fraction·D]`
/// (D = number of non-dropped documents). Ids are assigned in order of first
/// occurrence in the corpus.
pub fn build_vocabulary(
    docs: &[CleanDoc],
    min_df: u32,
    max_df_fraction: f64,
) -> Result<Vocabulary, ModelError> {
    let mut df: HashMap<&str, u32> = HashMap::new();
    let mut first_seen: Vec<&str> = Vec::new();
    let mut num_docs = 0usize;
    for doc in docs.iter().filter(|d| !d.dropped) {
        num_docs += 1;
        let mut seen_in_doc = std::collections::HashSet::new();
        for tok in &doc.tokens {
            if seen_in_doc.insert(tok.as_str()) {
                let entry = df.entry(tok.as_str()).or_insert(0);
                if *entry == 0 {
                    first_seen.push(tok.as_str());
                }
                *entry += 1;
            }
        }
    }
    let max_df = max_df_fraction * num_docs as f64;
    let mut id_to_word = Vec::new();
    let mut doc_freq = Vec::new();
    for word in first_seen {
        let f = df[word];
        if f >= min_df && (f as f64) <= max_df {
            id_to_word.push(word.to_string());
            doc_freq.push(f);
        }
    }
    if id_to_word.is_empty() {
        return Err(ModelError::EmptyVocabulary);
    }
    Ok(Vocabulary::from_parts(id_to_word, doc_freq))
}

/// Count in-vocabulary tokens; out-of-vocabulary tokens are dropped.
pub fn doc2bow(doc: &CleanDoc, vocab: &Vocabulary) -> BowDoc {
    let mut counts: HashMap<usize, u32> = HashMap::new();
    for tok in &doc.tokens {
        if let Some(id) = vocab.id(tok) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let mut counts: Vec<(usize, u32)> = counts.into_iter().collect();
    counts.sort_unstable();
    BowDoc {
        doc_id: doc.id,
        counts,
    }
}

/// Training hyperparameters. Defaults mirror the Mallet conventions:
/// symmetric document prior with `alpha_sum = 5.0`, word prior
/// `beta = 0.01`, 1000 sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub num_topics: usize,
    pub alpha_sum: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            num_topics: 20,
            alpha_sum: 5.0,
            beta: 0.01,
            iterations: 1000,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn with_topics(num_topics: usize) -> Self {
        TrainConfig {
            num_topics,
            ..Default::default()
        }
    }
}

/// Dominant topic of one document: the argmax of its theta row (lowest
/// index on ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominantAssignment {
    pub doc_id: usize,
    pub topic: usize,
    pub proportion: f64,
}

/// A trained model: priors, count tables, per-token assignments, and the
/// derived phi/theta distributions.
#[derive(Debug, Clone)]
pub struct LdaModel {
    pub num_topics: usize,
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub vocab: Vocabulary,
    /// K x V, rows sum to 1.
    pub phi: Vec<Vec<f64>>,
    /// One row per sampled document, rows sum to 1.
    pub theta: Vec<Vec<f64>>,
    /// Per sampled document: topic of each token position.
    pub assignments: Vec<Vec<u16>>,
    pub nkw: Vec<Vec<u32>>,
    pub nk: Vec<u64>,
    pub ndk: Vec<Vec<u32>>,
    /// doc_id of each sampled row.
    pub doc_ids: Vec<usize>,
    /// Token count of each sampled row.
    pub doc_lengths: Vec<usize>,
    row_of_doc: HashMap<usize, usize>,
}

/// Expand a bag into its token sequence (word ids ascending, repeats
/// adjacent). This is the fixed within-document scan order.
fn expand_tokens(bow: &BowDoc) -> Vec<u32> {
    let mut tokens = Vec::with_capacity(bow.token_count());
    for &(w, c) in &bow.counts {
        for _ in 0..c {
            tokens.push(w as u32);
        }
    }
    tokens
}

/// Collapsed Gibbs training. Documents with no in-vocabulary tokens are
/// excluded from sampling and reported as unassignable afterwards.
pub fn train_lda(
    corpus: &[BowDoc],
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<LdaModel, ModelError> {
    if cfg.num_topics < 1 {
        return Err(ModelError::InvalidTopicCount(cfg.num_topics));
    }
    let sampled: Vec<&BowDoc> = corpus.iter().filter(|d| !d.is_empty()).collect();
    if sampled.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let k = cfg.num_topics;
    let v = vocab.len();
    let alpha = vec![cfg.alpha_sum / k as f64; k];
    let beta = cfg.beta;
    let vbeta = v as f64 * beta;

    let docs_tokens: Vec<Vec<u32>> = sampled.iter().map(|d| expand_tokens(d)).collect();
    let total_tokens: usize = docs_tokens.iter().map(Vec::len).sum();

    let mut nkw = vec![vec![0u32; v]; k];
    let mut nk = vec![0u64; k];
    let mut ndk = vec![vec![0u32; k]; docs_tokens.len()];
    let mut z: Vec<Vec<u16>> = docs_tokens.iter().map(|t| vec![0u16; t.len()]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    for (d, tokens) in docs_tokens.iter().enumerate() {
        for (pos, &w) in tokens.iter().enumerate() {
            let topic = rng.random_range(0..k);
            z[d][pos] = topic as u16;
            ndk[d][topic] += 1;
            nkw[topic][w as usize] += 1;
            nk[topic] += 1;
        }
    }

    // 1/(nk + V·β), maintained incrementally; only two topics change per swap.
    let mut inv_nk: Vec<f64> = nk.iter().map(|&n| 1.0 / (n as f64 + vbeta)).collect();
    let mut weights = vec![0.0f64; k];

    for _sweep in 0..cfg.iterations {
        for (d, tokens) in docs_tokens.iter().enumerate() {
            for (pos, &w) in tokens.iter().enumerate() {
                let w = w as usize;
                let old = z[d][pos] as usize;
                ndk[d][old] -= 1;
                nkw[old][w] -= 1;
                nk[old] -= 1;
                inv_nk[old] = 1.0 / (nk[old] as f64 + vbeta);

                let mut total = 0.0;
                for t in 0..k {
                    let wgt = (ndk[d][t] as f64 + alpha[t])
                        * (nkw[t][w] as f64 + beta)
                        * inv_nk[t];
                    total += wgt;
                    weights[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = match weights[..k - 1].iter().position(|&cum| u < cum) {
                    Some(t) => t,
                    None => k - 1,
                };

                z[d][pos] = new as u16;
                ndk[d][new] += 1;
                nkw[new][w] += 1;
                nk[new] += 1;
                inv_nk[new] = 1.0 / (nk[new] as f64 + vbeta);
            }
        }
        #[cfg(debug_assertions)]
        check_count_conservation(&ndk, &nkw, &nk, total_tokens);
    }

    let phi: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            let denom = nk[t] as f64 + vbeta;
            (0..v).map(|w| (nkw[t][w] as f64 + beta) / denom).collect()
        })
        .collect();
    let alpha_total: f64 = alpha.iter().sum();
    let theta: Vec<Vec<f64>> = docs_tokens
        .iter()
        .enumerate()
        .map(|(d, tokens)| {
            let denom = tokens.len() as f64 + alpha_total;
            (0..k).map(|t| (ndk[d][t] as f64 + alpha[t]) / denom).collect()
        })
        .collect();

    let doc_ids: Vec<usize> = sampled.iter().map(|d| d.doc_id).collect();
    let doc_lengths: Vec<usize> = docs_tokens.iter().map(Vec::len).collect();
    let row_of_doc = doc_ids.iter().enumerate().map(|(r, &id)| (id, r)).collect();

    Ok(LdaModel {
        num_topics: k,
        alpha,
        beta,
        seed: cfg.seed,
        iterations: cfg.iterations,
        vocab: vocab.clone(),
        phi,
        theta,
        assignments: z,
        nkw,
        nk,
        ndk,
        doc_ids,
        doc_lengths,
        row_of_doc,
    })
}

fn check_count_conservation(ndk: &[Vec<u32>], nkw: &[Vec<u32>], nk: &[u64], total: usize) {
    let ndk_sum: u64 = ndk.iter().flatten().map(|&c| c as u64).sum();
    assert_eq!(ndk_sum, total as u64, "ndk does not conserve token count");
    for (t, row) in nkw.iter().enumerate() {
        let row_sum: u64 = row.iter().map(|&c| c as u64).sum();
        assert_eq!(row_sum, nk[t], "nkw row {t} does not match nk");
    }
}

impl LdaModel {
    /// Explicit form of the per-sweep debug assertion, for callers that
    /// want the invariant checked in release builds too.
    pub fn verify_counts(&self) -> bool {
        let total: usize = self.doc_lengths.iter().sum();
        let ndk_sum: u64 = self.ndk.iter().flatten().map(|&c| c as u64).sum();
        if ndk_sum != total as u64 {
            return false;
        }
        self.nkw
            .iter()
            .zip(&self.nk)
            .all(|(row, &nk)| row.iter().map(|&c| c as u64).sum::<u64>() == nk)
    }

    pub fn theta_row(&self, doc_id: usize) -> Result<&[f64], ModelError> {
        self.row_of_doc
            .get(&doc_id)
            .map(|&r| self.theta[r].as_slice())
            .ok_or(ModelError::UnassignableDoc(doc_id))
    }

    /// Words of topic `k` ranked by probability (ties by word id, so the
    /// ordering is total).
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<&str> {
        let row = &self.phi[topic];
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
        idx.into_iter().take(n).map(|i| self.vocab.word(i)).collect()
    }

    /// Token-mass share of each topic: `prevalence[k] = Σ_d θ_dk·len_d / Σ len_d`.
    pub fn prevalence(&self) -> Vec<f64> {
        let total: f64 = self.doc_lengths.iter().map(|&l| l as f64).sum();
        let mut prev = vec![0.0; self.num_topics];
        for (row, &len) in self.theta.iter().zip(&self.doc_lengths) {
            for (t, &p) in row.iter().enumerate() {
                prev[t] += p * len as f64;
            }
        }
        for p in &mut prev {
            *p /= total;
        }
        prev
    }
}

/// Argmax of the document's theta row; lowest topic index wins ties.
pub fn dominant_topic(model: &LdaModel, doc_id: usize) -> Result<DominantAssignment, ModelError> {
    let row = model.theta_row(doc_id)?;
    let (topic, proportion) = argmax(row);
    Ok(DominantAssignment {
        doc_id,
        topic,
        proportion,
    })
}

pub(crate) fn argmax(row: &[f64]) -> (usize, f64) {
    let mut best = 0usize;
    for (i, &p) in row.iter().enumerate() {
        if p > row[best] {
            best = i;
        }
    }
    (best, row[best])
}

/// Gibbs fold-in for an unseen document: phi held fixed, local topic counts
/// resampled for `iterations` sweeps. An empty document gets the prior
/// `alpha / Σ alpha`.
pub fn infer_theta(model: &LdaModel, doc: &BowDoc, iterations: usize, seed: u64) -> Vec<f64> {
    let k = model.num_topics;
    let alpha_total: f64 = model.alpha.iter().sum();
    let tokens = expand_tokens(doc);
    if tokens.is_empty() {
        return model.alpha.iter().map(|&a| a / alpha_total).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut local = vec![0u32; k];
    let mut z = vec![0u16; tokens.len()];
    for (pos, _) in tokens.iter().enumerate() {
        let t = rng.random_range(0..k);
        z[pos] = t as u16;
        local[t] += 1;
    }
    let mut weights = vec![0.0f64; k];
    for _ in 0..iterations {
        for (pos, &w) in tokens.iter().enumerate() {
            let w = w as usize;
            let old = z[pos] as usize;
            local[old] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                let wgt = (local[t] as f64 + model.alpha[t]) * model.phi[t][w];
                total += wgt;
                weights[t] = total;
            }
            let u = rng.random::<f64>() * total;
            let new = match weights[..k - 1].iter().position(|&cum| u < cum) {
                Some(t) => t,
                None => k - 1,
            };
            z[pos] = new as u16;
            local[new] += 1;
        }
    }
    let denom = tokens.len() as f64 + alpha_total;
    (0..k)
        .map(|t| (local[t] as f64 + model.alpha[t]) / denom)
        .collect()
}

/// On-disk form of a model, versioned.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub num_topics: usize,
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub vocabulary: Vec<String>,
    pub doc_freq: Vec<u32>,
    /// K x V, row-major.
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub doc_ids: Vec<usize>,
    pub doc_lengths: Vec<usize>,
}

impl From<&LdaModel> for ModelFile {
    fn from(m: &LdaModel) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            num_topics: m.num_topics,
            alpha: m.alpha.clone(),
            beta: m.beta,
            seed: m.seed,
            iterations: m.iterations,
            vocabulary: m.vocab.id_to_word.clone(),
            doc_freq: m.vocab.doc_freq.clone(),
            phi: m.phi.clone(),
            theta: m.theta.clone(),
            doc_ids: m.doc_ids.clone(),
            doc_lengths: m.doc_lengths.clone(),
        }
    }
}

pub fn save_model(model: &LdaModel, path: &Path) -> Result<(), ModelError> {
    let file = std::fs::File::create(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::to_writer(BufWriter::new(file), &ModelFile::from(model)).map_err(|source| {
        ModelError::Format {
            path: path.display().to_string(),
            source,
        }
    })
}

/// Load a serialized model. Count tables and assignments are not persisted;
/// the loaded model supports inference, labeling and mapping but not
/// resumed training.
pub fn load_model(path: &Path) -> Result<LdaModel, ModelError> {
    let file = std::fs::File::open(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mf: ModelFile =
        serde_json::from_reader(BufReader::new(file)).map_err(|source| ModelError::Format {
            path: path.display().to_string(),
            source,
        })?;
    if mf.format_version != MODEL_FORMAT_VERSION {
        return Err(ModelError::Version {
            path: path.display().to_string(),
            found: mf.format_version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let vocab = Vocabulary::from_parts(mf.vocabulary, mf.doc_freq);
    let row_of_doc = mf
        .doc_ids
        .iter()
        .enumerate()
        .map(|(r, &id)| (id, r))
        .collect();
    Ok(LdaModel {
        num_topics: mf.num_topics,
        alpha: mf.alpha,
        beta: mf.beta,
        seed: mf.seed,
        iterations: mf.iterations,
        vocab,
        phi: mf.phi,
        theta: mf.theta,
        assignments: Vec::new(),
        nkw: Vec::new(),
        nk: Vec::new(),
        ndk: Vec::new(),
        doc_ids: mf.doc_ids,
        doc_lengths: mf.doc_lengths,
        row_of_doc,
    })
}
