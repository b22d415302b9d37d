//! Evaluation of predicted topic labels against annotator gold labels:
//! exact-match accuracy, a confusion matrix, and per-label
//! precision/recall. Matching is case-insensitive after trimming, since
//! annotator files vary in casing.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::GoldLabelSet;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold label set is empty")]
    EmptyGold,
    #[error("no prediction for gold tweet ids {0:?}")]
    MissingPredictions(Vec<usize>),
}

/// Rows are gold labels, columns predicted labels, both over the union of
/// the two label sets in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }
}

/// Per-label precision/recall/support, derived from the confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub support: u64,
    pub predicted: u64,
    pub precision: f64,
    pub recall: f64,
}

fn canon(label: &str) -> String {
    label.trim().to_lowercase()
}

/// Pair each gold entry with its prediction, canonicalized. Errors list
/// every gold id that lacks a prediction.
fn paired(
    predicted: &[(usize, String)],
    gold: &GoldLabelSet,
) -> Result<Vec<(String, String)>, EvalError> {
    if gold.entries.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let by_id: HashMap<usize, &String> = predicted.iter().map(|(id, l)| (*id, l)).collect();
    let missing: Vec<usize> = gold
        .entries
        .iter()
        .map(|(id, _)| *id)
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingPredictions(missing));
    }
    Ok(gold
        .entries
        .iter()
        .map(|(id, g)| (canon(g), canon(by_id[id])))
        .collect())
}

/// Fraction of gold entries whose prediction matches exactly.
pub fn accuracy(predicted: &[(usize, String)], gold: &GoldLabelSet) -> Result<f64, EvalError> {
    let pairs = paired(predicted, gold)?;
    let correct = pairs.iter().filter(|(g, p)| g == p).count();
    Ok(correct as f64 / pairs.len() as f64)
}

/// Confusion counts over the union of gold and predicted labels.
pub fn confusion(
    predicted: &[(usize, String)],
    gold: &GoldLabelSet,
) -> Result<ConfusionMatrix, EvalError> {
    let pairs = paired(predicted, gold)?;
    let mut labels: Vec<String> = pairs
        .iter()
        .flat_map(|(g, p)| [g.clone(), p.clone()])
        .collect();
    labels.sort();
    labels.dedup();
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for (g, p) in &pairs {
        counts[index[g.as_str()]][index[p.as_str()]] += 1;
    }
    Ok(ConfusionMatrix { labels, counts })
}

/// Precision/recall per label from a confusion matrix. Labels with no
/// predictions get precision 0; labels with no gold occurrences get
/// recall 0.
pub fn per_label_stats(matrix: &ConfusionMatrix) -> BTreeMap<String, LabelStats> {
    let n = matrix.labels.len();
    let mut out = BTreeMap::new();
    for i in 0..n {
        let support: u64 = matrix.counts[i].iter().sum();
        let predicted: u64 = (0..n).map(|r| matrix.counts[r][i]).sum();
        let hit = matrix.counts[i][i];
        out.insert(
            matrix.labels[i].clone(),
            LabelStats {
                support,
                predicted,
                precision: if predicted > 0 {
                    hit as f64 / predicted as f64
                } else {
                    0.0
                },
                recall: if support > 0 {
                    hit as f64 / support as f64
                } else {
                    0.0
                },
            },
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gold(entries: &[(usize, &str)]) -> GoldLabelSet {
        GoldLabelSet {
            entries: entries.iter().map(|&(i, l)| (i, l.to_string())).collect(),
        }
    }

    fn preds(entries: &[(usize, &str)]) -> Vec<(usize, String)> {
        entries.iter().map(|&(i, l)| (i, l.to_string())).collect()
    }

    #[test]
    fn identical_labels_score_one() {
        let g = gold(&[(0, "store"), (1, "food")]);
        let p = preds(&[(0, "store"), (1, "food")]);
        assert_eq!(accuracy(&p, &g).unwrap(), 1.0);
    }

    #[test]
    fn half_matching_scores_half() {
        let g = gold(&[(0, "store"), (1, "food")]);
        let p = preds(&[(0, "store"), (1, "price")]);
        assert_eq!(accuracy(&p, &g).unwrap(), 0.5);
    }

    #[test]
    fn matching_is_case_insensitive_and_trimmed() {
        let g = gold(&[(0, "store")]);
        let p = preds(&[(0, " Store ")]);
        assert_eq!(accuracy(&p, &g).unwrap(), 1.0);
    }

    #[test]
    fn missing_predictions_listed() {
        let g = gold(&[(0, "a"), (5, "b"), (9, "c")]);
        let p = preds(&[(0, "a")]);
        match accuracy(&p, &g).unwrap_err() {
            EvalError::MissingPredictions(ids) => assert_eq!(ids, vec![5, 9]),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_gold_is_an_error() {
        assert!(matches!(
            accuracy(&preds(&[(0, "a")]), &gold(&[])),
            Err(EvalError::EmptyGold)
        ));
    }

    #[test]
    fn perfect_predictions_make_diagonal_matrix() {
        let g = gold(&[(0, "a"), (1, "b"), (2, "a")]);
        let p = preds(&[(0, "a"), (1, "b"), (2, "a")]);
        let m = confusion(&p, &g).unwrap();
        assert_eq!(m.labels, vec!["a", "b"]);
        assert_eq!(m.counts, vec![vec![2, 0], vec![0, 1]]);
        assert_eq!(m.trace(), m.total());
    }

    #[test]
    fn off_diagonal_counts_land_correctly() {
        let g = gold(&[(0, "a"), (1, "a"), (2, "b")]);
        let p = preds(&[(0, "a"), (1, "b"), (2, "b")]);
        let m = confusion(&p, &g).unwrap();
        // rows gold, columns predicted
        assert_eq!(m.counts[0][0], 1);
        assert_eq!(m.counts[0][1], 1);
        assert_eq!(m.counts[1][1], 1);
        assert_eq!(m.counts[1][0], 0);
    }

    #[test]
    fn row_and_column_sums_match_frequencies() {
        let g = gold(&[(0, "a"), (1, "a"), (2, "b"), (3, "c")]);
        let p = preds(&[(0, "b"), (1, "a"), (2, "b"), (3, "a")]);
        let m = confusion(&p, &g).unwrap();
        let idx = |l: &str| m.labels.iter().position(|x| x == l).unwrap();
        let row_sum: u64 = m.counts[idx("a")].iter().sum();
        assert_eq!(row_sum, 2);
        let col_sum: u64 = (0..m.labels.len()).map(|r| m.counts[r][idx("a")]).sum();
        assert_eq!(col_sum, 2);
        assert_eq!(m.total(), 4);
    }

    #[test]
    fn per_label_stats_from_matrix() {
        let g = gold(&[(0, "a"), (1, "a"), (2, "b")]);
        let p = preds(&[(0, "a"), (1, "b"), (2, "b")]);
        let m = confusion(&p, &g).unwrap();
        let stats = per_label_stats(&m);
        assert_eq!(stats["a"].support, 2);
        assert_eq!(stats["a"].predicted, 1);
        assert_eq!(stats["a"].precision, 1.0);
        assert_eq!(stats["a"].recall, 0.5);
        assert_eq!(stats["b"].predicted, 2);
        assert_eq!(stats["b"].precision, 0.5);
        assert_eq!(stats["b"].recall, 1.0);
    }

    proptest::proptest! {
        /// trace/total of the confusion matrix is exactly the accuracy.
        #[test]
        fn trace_over_total_equals_accuracy(
            labels in proptest::collection::vec(0u8..5, 1..60),
            flips in proptest::collection::vec(0u8..5, 1..60),
        ) {
            let names = ["a", "b", "c", "d", "e"];
            let g = GoldLabelSet {
                entries: labels
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| (i, names[l as usize].to_string()))
                    .collect(),
            };
            let p: Vec<(usize, String)> = labels
                .iter()
                .enumerate()
                .map(|(i, &l)| {
                    let flip = flips[i % flips.len()];
                    (i, names[((l + flip) % 5) as usize].to_string())
                })
                .collect();
            let acc = accuracy(&p, &g).unwrap();
            let m = confusion(&p, &g).unwrap();
            let ratio = m.trace() as f64 / m.total() as f64;
            proptest::prop_assert_eq!(acc, ratio);
        }
    }
}
