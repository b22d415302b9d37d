//! Dataset ingestion: tweet CSVs (Kaggle `Corona_NLP` layout) and gold-label
//! side files.
//!
//! The tweet files in the wild are a UTF-8/Latin-1 mix; fields are decoded
//! as UTF-8 with lossy replacement so ingestion never fails on encoding.
//! Replacement characters are stripped later by the preprocessing pipeline.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("file {path} has no header row")]
    MissingHeader { path: String },
    #[error("column {column:?} not found in header of {path}")]
    MissingColumn { column: String, path: String },
    #[error("gold label file line {line}: tweet id {value:?} is not a non-negative integer")]
    BadGoldId { line: usize, value: String },
    #[error("gold label file line {line}: duplicate tweet id {id}")]
    DuplicateGoldId { line: usize, id: usize },
    #[error("gold label file line {line}: expected two fields, found {found}")]
    BadGoldRow { line: usize, found: usize },
    #[error("gold label file line {line}: empty label")]
    EmptyGoldLabel { line: usize },
}

/// One row of the source dataset, text preserved byte-exact (after lossy
/// UTF-8 decoding of the raw bytes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: usize,
    pub text: String,
    /// Remaining columns (UserName, Location, Sentiment, ...) keyed by header.
    pub meta: Option<BTreeMap<String, String>>,
}

/// A data row that was rejected during parsing, with its 1-based data-row
/// number and the field count we saw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRow {
    pub row: usize,
    pub fields: usize,
    pub expected: usize,
}

/// Result of [`load_dataset`]: accepted rows plus a record of every skip,
/// so that `tweets.len() + skipped.len()` equals the data-row count of the
/// file.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub tweets: Vec<RawTweet>,
    pub skipped: Vec<SkippedRow>,
}

/// Annotator-provided labels keyed by tweet id, lowercased on load.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldLabelSet {
    pub entries: Vec<(usize, String)>,
}

/// Read a tweet CSV. `text_column` names the column holding the tweet body;
/// all other columns are passed through as metadata. Quoting follows
/// RFC 4180 (embedded delimiters and newlines inside quoted fields are
/// fine). Rows whose field count differs from the header are skipped and
/// reported.
pub fn load_dataset(
    path: &Path,
    text_column: &str,
    delimiter: u8,
) -> Result<LoadedDataset, IngestError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| IngestError::Open {
        path: display.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));

    let headers: Vec<String> = reader
        .byte_headers()
        .map_err(|source| IngestError::Csv {
            path: display.clone(),
            source,
        })?
        .iter()
        .map(|f| String::from_utf8_lossy(f).into_owned())
        .collect();
    if headers.is_empty() {
        return Err(IngestError::MissingHeader { path: display });
    }
    let text_idx = headers
        .iter()
        .position(|h| h == text_column)
        .ok_or_else(|| IngestError::MissingColumn {
            column: text_column.to_string(),
            path: display.clone(),
        })?;

    let mut tweets = Vec::new();
    let mut skipped = Vec::new();
    let mut record = csv::ByteRecord::new();
    let mut row = 0usize;
    loop {
        let more = reader
            .read_byte_record(&mut record)
            .map_err(|source| IngestError::Csv {
                path: display.clone(),
                source,
            })?;
        if !more {
            break;
        }
        row += 1;
        if record.len() != headers.len() {
            skipped.push(SkippedRow {
                row,
                fields: record.len(),
                expected: headers.len(),
            });
            continue;
        }
        let text = String::from_utf8_lossy(&record[text_idx]).into_owned();
        let mut meta = BTreeMap::new();
        for (idx, field) in record.iter().enumerate() {
            if idx != text_idx {
                meta.insert(
                    headers[idx].clone(),
                    String::from_utf8_lossy(field).into_owned(),
                );
            }
        }
        tweets.push(RawTweet {
            id: tweets.len(),
            text,
            meta: if meta.is_empty() { None } else { Some(meta) },
        });
    }
    Ok(LoadedDataset { tweets, skipped })
}

/// Read a headerless two-column CSV of `tweet_id,label` pairs. Labels are
/// lowercased; duplicate or non-integer ids are errors.
pub fn load_gold_labels(path: &Path) -> Result<GoldLabelSet, IngestError> {
    let display = path.display().to_string();
    let mut raw = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .map_err(|source| IngestError::Open {
            path: display,
            source,
        })?;
    parse_gold_labels(&raw)
}

pub fn parse_gold_labels(raw: &str) -> Result<GoldLabelSet, IngestError> {
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(2, ',').collect();
        if fields.len() != 2 {
            return Err(IngestError::BadGoldRow {
                line: line_no,
                found: fields.len(),
            });
        }
        let id: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| IngestError::BadGoldId {
                line: line_no,
                value: fields[0].trim().to_string(),
            })?;
        if !seen.insert(id) {
            return Err(IngestError::DuplicateGoldId { line: line_no, id });
        }
        let label = fields[1].trim().to_lowercase();
        if label.is_empty() {
            return Err(IngestError::EmptyGoldLabel { line: line_no });
        }
        entries.push((id, label));
    }
    Ok(GoldLabelSet { entries })
}

/// Write tweets back out as a two-column CSV (`id,text`), RFC 4180 quoted.
/// Exists for round-trip checks and for exporting pooled corpora.
pub fn write_tweets_csv<W: std::io::Write>(tweets: &[RawTweet], out: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["id", "text"])?;
    for t in tweets {
        writer.write_record([t.id.to_string().as_str(), t.text.as_str()])?;
    }
    writer.flush()?;
    Ok(())
}
