//! End-to-end orchestration: one config, sequential stages, versioned
//! artifacts on disk.
//!
//! Stages run as ingest -> preprocess -> aspects -> (sweep) -> train ->
//! cluster/label -> assign -> map, writing `clean.jsonl`, `aspects.jsonl`,
//! `curve.csv`, `model.json`, `labels.json`, `assigned.csv`, `map.json` and
//! `run-manifest.json` into the output directory. Artifacts are written to
//! a `.partial` file first and renamed on completion, so an aborted run
//! leaves only `.partial` debris behind. The manifest records the seed, a
//! hash of the full configuration, and a digest of every artifact; two runs
//! with the same config hash produce byte-identical label output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aspect::{extract_corpus_aspects, AspectTerm};
use crate::coherence::{self, CoherenceMetric, CoherenceReport, SweepConfig};
use crate::eval::{accuracy, confusion, per_label_stats, ConfusionMatrix};
use crate::geometry::{intertopic_map, render_svg, TopicMap};
use crate::ingest::{load_dataset, GoldLabelSet, RawTweet};
use crate::labeling::{
    assign_labels, cluster_aspect_terms, label_tweet, ranked_unigrams, TopicLabel, TweetLabel,
};
use crate::preprocess::{preprocess_corpus, CleanDoc, NonAsciiPolicy, PipelineConfig};
use crate::topicmodel::{
    build_vocabulary, doc2bow, dominant_topic, save_model, train_lda, BowDoc, LdaModel,
    TrainConfig,
};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
#[error("stage {stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

fn stage_err(stage: &'static str, err: impl std::fmt::Display) -> PipelineError {
    PipelineError {
        stage,
        message: err.to_string(),
    }
}

/// Full run configuration. Serialized verbatim into the manifest; its JSON
/// serialization is what the config hash covers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub text_column: String,
    pub delimiter: char,
    pub seed: u64,
    /// Fixed topic count; when absent the sweep's argmax is used.
    pub k: Option<usize>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub k_step: usize,
    pub alpha_sum: f64,
    pub beta: f64,
    pub iterations: usize,
    /// Sweep candidates train fewer sweeps than the final model.
    pub sweep_iterations: usize,
    pub metric: CoherenceMetric,
    pub top_n: usize,
    pub window: usize,
    pub min_df: u32,
    pub max_df_fraction: f64,
    pub min_token_len: usize,
    pub min_tokens_keep: usize,
    pub non_ascii_policy: NonAsciiPolicy,
    pub stopwords_file: Option<PathBuf>,
    pub contractions_file: Option<PathBuf>,
    pub fold_in_iterations: usize,
}

impl RunConfig {
    pub fn new(inputs: Vec<PathBuf>, output_dir: PathBuf, seed: u64) -> Self {
        RunConfig {
            inputs,
            output_dir,
            text_column: "OriginalTweet".to_string(),
            delimiter: ',',
            seed,
            k: Some(20),
            k_min: None,
            k_max: None,
            k_step: 1,
            alpha_sum: 5.0,
            beta: 0.01,
            iterations: 1000,
            sweep_iterations: 200,
            metric: CoherenceMetric::Cv,
            top_n: 20,
            window: 110,
            min_df: 2,
            max_df_fraction: 0.5,
            min_token_len: 2,
            min_tokens_keep: 1,
            non_ascii_policy: NonAsciiPolicy::StripChars,
            stopwords_file: None,
            contractions_file: None,
            fold_in_iterations: 50,
        }
    }

    /// Parse the flat `key = value` config format. `seed` is mandatory;
    /// there is no wall-clock fallback.
    pub fn from_str_config(raw: &str) -> Result<Self, PipelineError> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (idx, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                stage_err("config", format!("line {}: expected `key = value`", idx + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let parse_num = |k: &str, v: &str| {
            stage_err("config", format!("key {k}: cannot parse {v:?}"))
        };

        let inputs: Vec<PathBuf> = get("inputs")
            .map(|v| v.split(',').map(|p| PathBuf::from(p.trim())).collect())
            .unwrap_or_default();
        let output_dir = PathBuf::from(get("output_dir").unwrap_or("out"));
        let seed: u64 = get("seed")
            .ok_or_else(|| stage_err("config", "seed is mandatory"))?
            .parse()
            .map_err(|_| parse_num("seed", get("seed").unwrap()))?;

        let mut cfg = RunConfig::new(inputs, output_dir, seed);
        cfg.k = None;
        macro_rules! set {
            ($key:literal, $field:expr) => {
                if let Some(v) = get($key) {
                    $field = v.parse().map_err(|_| parse_num($key, v))?;
                }
            };
        }
        if let Some(v) = get("text_column") {
            cfg.text_column = v.to_string();
        }
        if let Some(v) = get("delimiter") {
            let mut chars = v.chars();
            cfg.delimiter = chars
                .next()
                .filter(|_| chars.next().is_none())
                .ok_or_else(|| stage_err("config", "delimiter must be one character"))?;
        }
        if let Some(v) = get("k") {
            cfg.k = Some(v.parse().map_err(|_| parse_num("k", v))?);
        }
        if let Some(v) = get("k_min") {
            cfg.k_min = Some(v.parse().map_err(|_| parse_num("k_min", v))?);
        }
        if let Some(v) = get("k_max") {
            cfg.k_max = Some(v.parse().map_err(|_| parse_num("k_max", v))?);
        }
        set!("k_step", cfg.k_step);
        set!("alpha_sum", cfg.alpha_sum);
        set!("beta", cfg.beta);
        set!("iterations", cfg.iterations);
        set!("sweep_iterations", cfg.sweep_iterations);
        set!("top_n", cfg.top_n);
        set!("window", cfg.window);
        set!("min_df", cfg.min_df);
        set!("max_df_fraction", cfg.max_df_fraction);
        set!("min_token_len", cfg.min_token_len);
        set!("min_tokens_keep", cfg.min_tokens_keep);
        if let Some(v) = get("metric") {
            cfg.metric = match v {
                "cv" => CoherenceMetric::Cv,
                "umass" => CoherenceMetric::UMass,
                other => {
                    return Err(stage_err(
                        "config",
                        format!("metric must be cv or umass, got {other:?}"),
                    ))
                }
            };
        }
        if let Some(v) = get("non_ascii_policy") {
            cfg.non_ascii_policy = match v {
                "strip_chars" => NonAsciiPolicy::StripChars,
                "drop_tweet" => NonAsciiPolicy::DropTweet,
                other => {
                    return Err(stage_err(
                        "config",
                        format!("non_ascii_policy must be strip_chars or drop_tweet, got {other:?}"),
                    ))
                }
            };
        }
        if let Some(v) = get("stopwords") {
            cfg.stopwords_file = Some(PathBuf::from(v));
        }
        if let Some(v) = get("contractions") {
            cfg.contractions_file = Some(PathBuf::from(v));
        }
        set!("fold_in_iterations", cfg.fold_in_iterations);
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let raw = fs::read_to_string(path)
            .map_err(|e| stage_err("config", format!("{}: {e}", path.display())))?;
        Self::from_str_config(&raw)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.inputs.is_empty() {
            return Err(stage_err("config", "no input files given"));
        }
        for input in &self.inputs {
            if !input.exists() {
                return Err(stage_err(
                    "config",
                    format!("input file {} does not exist", input.display()),
                ));
            }
        }
        if self.k.is_none() && (self.k_min.is_none() || self.k_max.is_none()) {
            return Err(stage_err("config", "need k or a k_min/k_max sweep range"));
        }
        if self.k_step == 0 {
            return Err(stage_err("config", "k_step must be >= 1"));
        }
        Ok(())
    }

    pub fn sweep_candidates(&self) -> Option<Vec<usize>> {
        match (self.k_min, self.k_max) {
            (Some(lo), Some(hi)) if lo <= hi => {
                Some((lo..=hi).step_by(self.k_step).collect())
            }
            _ => None,
        }
    }

    /// SHA-256 over the canonical JSON form of this config.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex_digest(json.as_bytes())
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = PipelineConfig {
            min_token_len: self.min_token_len,
            min_tokens_keep: self.min_tokens_keep,
            non_ascii_policy: self.non_ascii_policy,
            ..PipelineConfig::default()
        };
        if let Some(path) = &self.stopwords_file {
            cfg = cfg
                .with_stopwords_file(path)
                .map_err(|e| stage_err("config", format!("{}: {e}", path.display())))?;
        }
        if let Some(path) = &self.contractions_file {
            cfg = cfg
                .with_contractions_file(path)
                .map_err(|e| stage_err("config", format!("{}: {e}", path.display())))?;
        }
        Ok(cfg)
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Write an artifact atomically: bytes land in `<path>.partial` first and
/// are renamed into place, so interrupted stages leave only `.partial`
/// files.
pub fn write_artifact(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let partial = partial_path(path);
    fs::write(&partial, bytes)?;
    fs::rename(&partial, path)
}

fn partial_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".partial");
    PathBuf::from(os)
}

// ---------------------------------------------------------------------------
// artifact schemas
// ---------------------------------------------------------------------------

/// `labels.json` entry: the resolved label plus the cluster's top unigrams
/// (the bar-chart data).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelReportEntry {
    pub topic: usize,
    pub label: String,
    pub label_count: u64,
    pub rank_used: usize,
    pub top_unigrams: Vec<UnigramCount>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnigramCount {
    pub word: String,
    pub count: u64,
}

/// `map.json` payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapFile {
    pub format_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub labels: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    pub prevalence: Vec<f64>,
    pub distance: Vec<Vec<f64>>,
}

/// `report.json` payload for `evaluate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub evaluated: u64,
    pub labels: Vec<String>,
    pub per_label: BTreeMap<String, crate::eval::LabelStats>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    seed: u64,
    config_hash: String,
    config: RunConfig,
    versions: BTreeMap<String, String>,
    artifacts: Vec<ManifestArtifact>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestArtifact {
    name: String,
    path: String,
    sha256: String,
}

pub fn write_clean_jsonl(docs: &[CleanDoc]) -> Vec<u8> {
    let mut out = Vec::new();
    for doc in docs {
        serde_json::to_writer(&mut out, doc).expect("clean doc serializes");
        out.push(b'\n');
    }
    out
}

pub fn read_clean_jsonl(path: &Path) -> std::io::Result<Vec<CleanDoc>> {
    let file = fs::File::open(path)?;
    let mut docs = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
    }
    Ok(docs)
}

pub fn write_aspects_jsonl(aspects: &[AspectTerm]) -> Vec<u8> {
    let mut out = Vec::new();
    for a in aspects {
        serde_json::to_writer(&mut out, a).expect("aspect serializes");
        out.push(b'\n');
    }
    out
}

pub fn read_aspects_jsonl(path: &Path) -> std::io::Result<Vec<AspectTerm>> {
    let file = fs::File::open(path)?;
    let mut aspects = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        aspects.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
    }
    Ok(aspects)
}

pub fn write_curve_csv(report: &CoherenceReport) -> Vec<u8> {
    let mut out = String::from("k,score\n");
    for (k, score) in &report.per_k {
        let _ = writeln!(out, "{k},{score}");
    }
    out.into_bytes()
}

pub fn labels_json_bytes(entries: &[LabelReportEntry]) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(entries).expect("labels serialize");
    bytes.push(b'\n');
    bytes
}

pub fn read_labels_json(path: &Path) -> std::io::Result<Vec<TopicLabel>> {
    let raw = fs::read_to_string(path)?;
    let entries: Vec<LabelReportEntry> =
        serde_json::from_str(&raw).map_err(std::io::Error::other)?;
    Ok(entries
        .into_iter()
        .map(|e| TopicLabel {
            topic: e.topic,
            label: e.label,
            label_count: e.label_count,
            rank_used: e.rank_used,
        })
        .collect())
}

/// `assigned.csv` rows. Unlabelable tweets keep their row with empty
/// topic/label fields.
pub fn write_assigned_csv(rows: &[(usize, TweetLabel)]) -> Vec<u8> {
    let mut out = String::from("tweet_id,topic,label\n");
    for (id, label) in rows {
        match label {
            TweetLabel::Labeled { topic, label, .. } => {
                let _ = writeln!(out, "{id},{topic},{label}");
            }
            TweetLabel::Unlabelable => {
                let _ = writeln!(out, "{id},,");
            }
        }
    }
    out.into_bytes()
}

/// Read `assigned.csv` back as `(tweet_id, label)` predictions, skipping
/// unlabelable rows.
pub fn read_assigned_csv(path: &Path) -> Result<Vec<(usize, String)>, PipelineError> {
    let raw =
        fs::read_to_string(path).map_err(|e| stage_err("evaluate", format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (idx, line) in raw.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(stage_err(
                "evaluate",
                format!("assigned.csv line {}: expected 3 fields", idx + 1),
            ));
        }
        let id: usize = fields[0].parse().map_err(|_| {
            stage_err(
                "evaluate",
                format!("assigned.csv line {}: bad tweet id {:?}", idx + 1, fields[0]),
            )
        })?;
        if fields[2].is_empty() {
            continue;
        }
        out.push((id, fields[2].to_string()));
    }
    Ok(out)
}

pub fn confusion_csv_bytes(matrix: &ConfusionMatrix) -> Vec<u8> {
    let mut out = String::from("gold\\predicted");
    for l in &matrix.labels {
        let _ = write!(out, ",{l}");
    }
    out.push('\n');
    for (i, row) in matrix.counts.iter().enumerate() {
        let _ = write!(out, "{}", matrix.labels[i]);
        for c in row {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Build the evaluation report (accuracy, confusion, per-label stats).
pub fn evaluate_predictions(
    predicted: &[(usize, String)],
    gold: &GoldLabelSet,
) -> Result<(EvalReport, ConfusionMatrix), PipelineError> {
    let acc = accuracy(predicted, gold).map_err(|e| stage_err("evaluate", e))?;
    let matrix = confusion(predicted, gold).map_err(|e| stage_err("evaluate", e))?;
    let report = EvalReport {
        accuracy: acc,
        evaluated: matrix.total(),
        labels: matrix.labels.clone(),
        per_label: per_label_stats(&matrix),
    };
    Ok((report, matrix))
}

// ---------------------------------------------------------------------------
// the run itself
// ---------------------------------------------------------------------------

/// Everything a finished run leaves in memory; the artifacts are already
/// on disk.
pub struct RunSummary {
    pub config_hash: String,
    pub num_tweets: usize,
    pub skipped_rows: usize,
    pub chosen_k: usize,
    pub labels: Vec<TopicLabel>,
    pub sweep: Option<CoherenceReport>,
    pub artifact_paths: Vec<PathBuf>,
}

/// Pool the input CSVs into one tweet list with globally unique ids
/// (later files are offset past earlier ones).
fn ingest_stage(cfg: &RunConfig) -> Result<(Vec<RawTweet>, usize), PipelineError> {
    let mut pooled: Vec<RawTweet> = Vec::new();
    let mut skipped = 0usize;
    for input in &cfg.inputs {
        let loaded = load_dataset(input, &cfg.text_column, cfg.delimiter as u8)
            .map_err(|e| stage_err("ingest", e))?;
        skipped += loaded.skipped.len();
        let offset = pooled.len();
        pooled.extend(loaded.tweets.into_iter().map(|mut t| {
            t.id += offset;
            t
        }));
    }
    if pooled.is_empty() {
        return Err(stage_err("ingest", "no data rows in any input file"));
    }
    Ok((pooled, skipped))
}

/// Run the whole pipeline. Any stage failure aborts with the stage name
/// attached; artifacts written so far stay in place.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let pipeline_cfg = cfg.pipeline_config()?;
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| stage_err("config", format!("cannot create output dir: {e}")))?;
    let config_hash = cfg.config_hash();
    let mut artifacts: Vec<(String, PathBuf)> = Vec::new();
    let art = |name: &str, cfg: &RunConfig| cfg.output_dir.join(name);

    // ingest
    let (tweets, skipped_rows) = ingest_stage(cfg)?;

    // preprocess
    let docs = preprocess_corpus(&tweets, &pipeline_cfg);
    let clean_path = art("clean.jsonl", cfg);
    write_artifact(&clean_path, &write_clean_jsonl(&docs))
        .map_err(|e| stage_err("preprocess", e))?;
    artifacts.push(("clean.jsonl".into(), clean_path));

    // aspects
    let aspects = extract_corpus_aspects(&tweets, &pipeline_cfg);
    let aspects_path = art("aspects.jsonl", cfg);
    write_artifact(&aspects_path, &write_aspects_jsonl(&aspects))
        .map_err(|e| stage_err("aspects", e))?;
    artifacts.push(("aspects.jsonl".into(), aspects_path));

    // vocabulary + bow corpus
    let vocab = build_vocabulary(&docs, cfg.min_df, cfg.max_df_fraction)
        .map_err(|e| stage_err("train", e))?;
    let corpus: Vec<BowDoc> = docs.iter().map(|d| doc2bow(d, &vocab)).collect();

    // optional sweep
    let mut sweep_report = None;
    if let Some(candidates) = cfg.sweep_candidates() {
        let sweep_cfg = SweepConfig {
            metric: cfg.metric,
            top_n: cfg.top_n,
            window: cfg.window,
            epsilon: coherence::DEFAULT_EPSILON,
            train: TrainConfig {
                num_topics: 0,
                alpha_sum: cfg.alpha_sum,
                beta: cfg.beta,
                iterations: cfg.sweep_iterations,
                seed: cfg.seed,
            },
        };
        let report = coherence::sweep_k(&docs, &corpus, &vocab, &candidates, &sweep_cfg)
            .map_err(|e| stage_err("sweep-k", e))?;
        let curve_path = art("curve.csv", cfg);
        write_artifact(&curve_path, &write_curve_csv(&report))
            .map_err(|e| stage_err("sweep-k", e))?;
        artifacts.push(("curve.csv".into(), curve_path));
        sweep_report = Some(report);
    }

    let chosen_k = match (cfg.k, &sweep_report) {
        (Some(k), _) => k,
        (None, Some(report)) => report.chosen_k,
        (None, None) => unreachable!("validate() requires k or a sweep range"),
    };

    // train
    let train_cfg = TrainConfig {
        num_topics: chosen_k,
        alpha_sum: cfg.alpha_sum,
        beta: cfg.beta,
        iterations: cfg.iterations,
        seed: cfg.seed,
    };
    let model = train_lda(&corpus, &vocab, &train_cfg).map_err(|e| stage_err("train", e))?;
    let model_path = art("model.json", cfg);
    save_model(&model, &partial_path(&model_path)).map_err(|e| stage_err("train", e))?;
    fs::rename(partial_path(&model_path), &model_path).map_err(|e| stage_err("train", e))?;
    artifacts.push(("model.json".into(), model_path));

    // cluster + label
    let assignments: Vec<_> = model
        .doc_ids
        .iter()
        .filter_map(|&id| dominant_topic(&model, id).ok())
        .collect();
    let clusters = cluster_aspect_terms(&assignments, &aspects, chosen_k);
    let labels = assign_labels(&clusters);
    let entries: Vec<LabelReportEntry> = labels
        .iter()
        .map(|l| LabelReportEntry {
            topic: l.topic,
            label: l.label.clone(),
            label_count: l.label_count,
            rank_used: l.rank_used,
            top_unigrams: ranked_unigrams(&clusters[l.topic])
                .into_iter()
                .take(20)
                .map(|(word, count)| UnigramCount { word, count })
                .collect(),
        })
        .collect();
    let labels_path = art("labels.json", cfg);
    write_artifact(&labels_path, &labels_json_bytes(&entries))
        .map_err(|e| stage_err("label", e))?;
    artifacts.push(("labels.json".into(), labels_path));

    // assign every pooled tweet through its trained theta row
    let assigned: Vec<(usize, TweetLabel)> = tweets
        .iter()
        .map(|t| (t.id, label_tweet(&model, &labels, t.id)))
        .collect();
    let assigned_path = art("assigned.csv", cfg);
    write_artifact(&assigned_path, &write_assigned_csv(&assigned))
        .map_err(|e| stage_err("assign", e))?;
    artifacts.push(("assigned.csv".into(), assigned_path));

    // intertopic map
    let map = intertopic_map(&model).map_err(|e| stage_err("map", e))?;
    let map_file = map_file_from(&map, &labels, cfg.seed, &config_hash);
    let map_path = art("map.json", cfg);
    let mut map_bytes = serde_json::to_vec_pretty(&map_file).expect("map serializes");
    map_bytes.push(b'\n');
    write_artifact(&map_path, &map_bytes).map_err(|e| stage_err("map", e))?;
    artifacts.push(("map.json".into(), map_path));

    // manifest
    let mut versions = BTreeMap::new();
    versions.insert(
        "topiclab-core".to_string(),
        env!("CARGO_PKG_VERSION").to_string(),
    );
    let manifest = Manifest {
        format_version: MANIFEST_FORMAT_VERSION,
        seed: cfg.seed,
        config_hash: config_hash.clone(),
        config: cfg.clone(),
        versions,
        artifacts: artifacts
            .iter()
            .map(|(name, path)| {
                let bytes = fs::read(path).unwrap_or_default();
                ManifestArtifact {
                    name: name.clone(),
                    path: name.clone(),
                    sha256: hex_digest(&bytes),
                }
            })
            .collect(),
    };
    let manifest_path = art("run-manifest.json", cfg);
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    manifest_bytes.push(b'\n');
    write_artifact(&manifest_path, &manifest_bytes).map_err(|e| stage_err("manifest", e))?;

    let mut artifact_paths: Vec<PathBuf> = artifacts.into_iter().map(|(_, p)| p).collect();
    artifact_paths.push(manifest_path);

    Ok(RunSummary {
        config_hash,
        num_tweets: tweets.len(),
        skipped_rows,
        chosen_k,
        labels,
        sweep: sweep_report,
        artifact_paths,
    })
}

pub fn map_file_from(
    map: &TopicMap,
    labels: &[TopicLabel],
    seed: u64,
    config_hash: &str,
) -> MapFile {
    MapFile {
        format_version: 1,
        seed,
        config_hash: config_hash.to_string(),
        labels: labels.iter().map(|l| l.label.clone()).collect(),
        coords: map.coords.clone(),
        prevalence: map.prevalence.clone(),
        distance: map.distance.clone(),
    }
}

/// Label unseen tweets (e.g. a held-out CSV) by Gibbs fold-in against a
/// trained model.
pub fn assign_unseen(
    model: &LdaModel,
    labels: &[TopicLabel],
    tweets: &[RawTweet],
    pipeline_cfg: &PipelineConfig,
    fold_in_iterations: usize,
    seed: u64,
) -> Vec<(usize, TweetLabel)> {
    let docs = preprocess_corpus(tweets, pipeline_cfg);
    docs.iter()
        .map(|d| {
            let bow = doc2bow(d, &model.vocab);
            // per-doc seed offset keeps docs independent but reproducible
            let label = crate::labeling::label_unseen(
                model,
                labels,
                &bow,
                fold_in_iterations,
                seed.wrapping_add(d.id as u64),
            );
            (d.id, label)
        })
        .collect()
}

/// Write `map.svg` for a computed map file.
pub fn svg_bytes(map: &TopicMap, labels: &[TopicLabel]) -> Vec<u8> {
    render_svg(map, Some(labels)).into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parse_round_trip() {
        let raw = "\
# comment
inputs = a.csv, b.csv
output_dir = out
seed = 42
k = 20
metric = umass
min_df = 3
delimiter = ;
non_ascii_policy = drop_tweet
";
        let cfg = RunConfig::from_str_config(raw).unwrap();
        assert_eq!(cfg.inputs, vec![PathBuf::from("a.csv"), PathBuf::from("b.csv")]);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.k, Some(20));
        assert_eq!(cfg.metric, CoherenceMetric::UMass);
        assert_eq!(cfg.min_df, 3);
        assert_eq!(cfg.delimiter, ';');
        assert_eq!(cfg.non_ascii_policy, NonAsciiPolicy::DropTweet);
        // defaults survive
        assert_eq!(cfg.iterations, 1000);
        assert_eq!(cfg.alpha_sum, 5.0);
    }

    #[test]
    fn seed_is_mandatory() {
        let err = RunConfig::from_str_config("inputs = a.csv\nk = 5\n").unwrap_err();
        assert_eq!(err.stage, "config");
        assert!(err.message.contains("seed"));
    }

    #[test]
    fn validation_needs_existing_inputs_and_k() {
        let mut cfg = RunConfig::new(vec![], PathBuf::from("out"), 1);
        assert!(cfg.validate().is_err());
        cfg.inputs = vec![PathBuf::from("/definitely/not/here.csv")];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sweep_candidates_respect_step() {
        let mut cfg = RunConfig::new(vec![], PathBuf::from("out"), 1);
        cfg.k_min = Some(2);
        cfg.k_max = Some(10);
        cfg.k_step = 4;
        assert_eq!(cfg.sweep_candidates(), Some(vec![2, 6, 10]));
        cfg.k_min = None;
        assert_eq!(cfg.sweep_candidates(), None);
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let cfg = RunConfig::new(vec![PathBuf::from("a.csv")], PathBuf::from("out"), 7);
        let h1 = cfg.config_hash();
        let h2 = cfg.config_hash();
        assert_eq!(h1, h2);
        let mut cfg2 = cfg.clone();
        cfg2.seed = 8;
        assert_ne!(h1, cfg2.config_hash());
    }

    #[test]
    fn artifact_writes_are_atomic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        write_artifact(&path, b"content").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"content");
        assert!(!partial_path(&path).exists());
    }

    #[test]
    fn assigned_csv_round_trip_skips_unlabelable() {
        let rows = vec![
            (
                0usize,
                TweetLabel::Labeled {
                    topic: 3,
                    proportion: 0.8,
                    label: "store".into(),
                },
            ),
            (1usize, TweetLabel::Unlabelable),
        ];
        let bytes = write_assigned_csv(&rows);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("tweet_id,topic,label\n"));
        assert!(text.contains("0,3,store\n"));
        assert!(text.contains("1,,\n"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("assigned.csv");
        fs::write(&path, bytes).unwrap();
        let preds = read_assigned_csv(&path).unwrap();
        assert_eq!(preds, vec![(0, "store".to_string())]);
    }

    #[test]
    fn clean_jsonl_round_trip() {
        let docs = vec![
            CleanDoc {
                id: 0,
                tokens: vec!["aa".into(), "bb".into()],
                dropped: false,
            },
            CleanDoc {
                id: 1,
                tokens: vec![],
                dropped: true,
            },
        ];
        let bytes = write_clean_jsonl(&docs);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.lines().next().unwrap().contains("\"id\":0"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clean.jsonl");
        fs::write(&path, bytes).unwrap();
        assert_eq!(read_clean_jsonl(&path).unwrap(), docs);
    }
}
