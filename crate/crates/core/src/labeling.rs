//! Topic labeling: cluster aspect-term unigrams by dominant topic, then
//! give each topic its highest-count unigram, resolving label collisions
//! globally.
//!
//! Collision rule: when several topics want the same unigram, the topic
//! with the higher count keeps it and the others fall through to their
//! next-ranked unigram. The resolution below generalizes that pairwise
//! statement to any number of topics and to cascading displacement by
//! always settling the highest-count open claim first, so the outcome is
//! deterministic and all final labels are distinct.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::aspect::AspectTerm;
use crate::topicmodel::{infer_theta, BowDoc, DominantAssignment, LdaModel};

/// Multiset of aspect unigrams over the tweets whose dominant topic is
/// `topic`. A BTreeMap keeps iteration (and serialization) deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectCluster {
    pub topic: usize,
    pub unigram_counts: BTreeMap<String, u64>,
}

/// Final label of one topic. `rank_used` is the index into the topic's
/// ranked unigram list (0 = top). Exhausted clusters fall back to
/// `topic-<k>` with a zero count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub topic: usize,
    pub label: String,
    pub label_count: u64,
    pub rank_used: usize,
}

impl TopicLabel {
    pub fn is_fallback(&self) -> bool {
        self.label_count == 0
    }
}

/// Group aspect unigrams by the dominant topic of their source tweet.
/// Aspects of tweets without an assignment (dropped or empty) are skipped.
/// Counts are raw frequencies: the same unigram occurring twice counts
/// twice.
pub fn cluster_aspect_terms(
    assignments: &[DominantAssignment],
    aspects: &[AspectTerm],
    num_topics: usize,
) -> Vec<AspectCluster> {
    let topic_of: HashMap<usize, usize> =
        assignments.iter().map(|a| (a.doc_id, a.topic)).collect();
    let mut clusters: Vec<AspectCluster> = (0..num_topics)
        .map(|topic| AspectCluster {
            topic,
            unigram_counts: BTreeMap::new(),
        })
        .collect();
    for aspect in aspects {
        let Some(&topic) = topic_of.get(&aspect.source_doc) else {
            continue;
        };
        for unigram in &aspect.unigrams {
            *clusters[topic]
                .unigram_counts
                .entry(unigram.clone())
                .or_insert(0) += 1;
        }
    }
    clusters
}

/// Unigrams sorted by count descending, then lexicographically.
pub fn ranked_unigrams(cluster: &AspectCluster) -> Vec<(String, u64)> {
    let mut ranked: Vec<(String, u64)> = cluster
        .unigram_counts
        .iter()
        .map(|(w, &c)| (w.clone(), c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Assign every topic a distinct label. Repeatedly take the open claim
/// with the highest count among each unlabeled topic's current front
/// candidate (ties: lower topic index); an unclaimed unigram is taken, a
/// claimed one advances that topic to its next candidate.
pub fn assign_labels(clusters: &[AspectCluster]) -> Vec<TopicLabel> {
    let queues: Vec<Vec<(String, u64)>> = clusters.iter().map(ranked_unigrams).collect();
    let mut front: Vec<usize> = vec![0; clusters.len()];
    let mut labels: Vec<Option<TopicLabel>> = vec![None; clusters.len()];
    let mut claimed: HashSet<&str> = HashSet::new();

    loop {
        let mut best: Option<(usize, &str, u64)> = None;
        for (topic, queue) in queues.iter().enumerate() {
            if labels[topic].is_some() {
                continue;
            }
            let Some((word, count)) = queue.get(front[topic]) else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bt, _, bc)) => *count > bc || (*count == bc && topic < bt),
            };
            if better {
                best = Some((topic, word.as_str(), *count));
            }
        }
        let Some((topic, word, count)) = best else {
            break;
        };
        if claimed.insert(word) {
            labels[topic] = Some(TopicLabel {
                topic,
                label: word.to_string(),
                label_count: count,
                rank_used: front[topic],
            });
        } else {
            front[topic] += 1;
        }
    }

    labels
        .into_iter()
        .enumerate()
        .map(|(topic, label)| {
            label.unwrap_or_else(|| TopicLabel {
                topic,
                label: format!("topic-{topic}"),
                label_count: 0,
                rank_used: queues[topic].len(),
            })
        })
        .collect()
}

/// What labeling a single tweet produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TweetLabel {
    Labeled {
        topic: usize,
        proportion: f64,
        label: String,
    },
    /// Nothing left of the tweet after preprocessing (or only
    /// out-of-vocabulary words), so no topic applies.
    Unlabelable,
}

/// Label an in-corpus document through its trained theta row.
pub fn label_tweet(model: &LdaModel, labels: &[TopicLabel], doc_id: usize) -> TweetLabel {
    match model.theta_row(doc_id) {
        Ok(row) => labeled_from_row(row, labels),
        Err(_) => TweetLabel::Unlabelable,
    }
}

/// Label an unseen document by folding it into the fixed topics.
pub fn label_unseen(
    model: &LdaModel,
    labels: &[TopicLabel],
    doc: &BowDoc,
    fold_in_iterations: usize,
    seed: u64,
) -> TweetLabel {
    if doc.is_empty() {
        return TweetLabel::Unlabelable;
    }
    let theta = infer_theta(model, doc, fold_in_iterations, seed);
    labeled_from_row(&theta, labels)
}

fn labeled_from_row(row: &[f64], labels: &[TopicLabel]) -> TweetLabel {
    let (topic, proportion) = crate::topicmodel::argmax(row);
    TweetLabel::Labeled {
        topic,
        proportion,
        label: labels[topic].label.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster(topic: usize, counts: &[(&str, u64)]) -> AspectCluster {
        AspectCluster {
            topic,
            unigram_counts: counts.iter().map(|&(w, c)| (w.to_string(), c)).collect(),
        }
    }

    fn aspect(doc: usize, unigrams: &[&str]) -> AspectTerm {
        AspectTerm {
            source_doc: doc,
            phrase: unigrams.join(" "),
            unigrams: unigrams.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn assignment(doc_id: usize, topic: usize) -> DominantAssignment {
        DominantAssignment {
            doc_id,
            topic,
            proportion: 1.0,
        }
    }

    #[test]
    fn clustering_counts_by_dominant_topic() {
        let assignments = vec![assignment(0, 3)];
        let aspects = vec![aspect(0, &["store", "price"])];
        let clusters = cluster_aspect_terms(&assignments, &aspects, 4);
        assert_eq!(clusters.len(), 4);
        assert_eq!(clusters[3].unigram_counts["store"], 1);
        assert_eq!(clusters[3].unigram_counts["price"], 1);
        assert!(clusters[0].unigram_counts.is_empty());
        assert!(clusters[1].unigram_counts.is_empty());
    }

    #[test]
    fn clustering_accumulates_across_docs() {
        let assignments = vec![assignment(0, 0), assignment(1, 0)];
        let aspects = vec![aspect(0, &["food"]), aspect(1, &["food"])];
        let clusters = cluster_aspect_terms(&assignments, &aspects, 1);
        assert_eq!(clusters[0].unigram_counts["food"], 2);
    }

    #[test]
    fn aspects_without_assignment_are_skipped() {
        let assignments = vec![assignment(0, 0)];
        let aspects = vec![aspect(0, &["food"]), aspect(7, &["ghost"])];
        let clusters = cluster_aspect_terms(&assignments, &aspects, 1);
        assert_eq!(clusters[0].unigram_counts.len(), 1);
        let total: u64 = clusters
            .iter()
            .flat_map(|c| c.unigram_counts.values())
            .sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn ranking_by_count_then_lexicographic() {
        let c = cluster(7, &[("scam", 50), ("price", 20)]);
        assert_eq!(
            ranked_unigrams(&c),
            vec![("scam".to_string(), 50), ("price".to_string(), 20)]
        );
        let c = cluster(0, &[("bb", 2), ("aa", 2)]);
        assert_eq!(
            ranked_unigrams(&c),
            vec![("aa".to_string(), 2), ("bb".to_string(), 2)]
        );
        let c = cluster(0, &[]);
        assert!(ranked_unigrams(&c).is_empty());
    }

    #[test]
    fn conflict_resolves_by_highest_count() {
        // topic A tops with (shopping, 10); topic B has (shopping, 7) then
        // (store, 5): A keeps "shopping", B falls through to "store".
        let clusters = vec![
            cluster(0, &[("shopping", 10)]),
            cluster(1, &[("shopping", 7), ("store", 5)]),
        ];
        let labels = assign_labels(&clusters);
        assert_eq!(labels[0].label, "shopping");
        assert_eq!(labels[0].rank_used, 0);
        assert_eq!(labels[0].label_count, 10);
        assert_eq!(labels[1].label, "store");
        assert_eq!(labels[1].rank_used, 1);
        assert_eq!(labels[1].label_count, 5);
    }

    #[test]
    fn three_way_conflict_cascades() {
        let clusters = vec![
            cluster(0, &[("food", 9), ("store", 8)]),
            cluster(1, &[("food", 10), ("price", 1)]),
            cluster(2, &[("food", 8), ("store", 7), ("bank", 2)]),
        ];
        let labels = assign_labels(&clusters);
        assert_eq!(labels[1].label, "food");
        assert_eq!(labels[0].label, "store");
        assert_eq!(labels[2].label, "bank");
        let set: HashSet<&str> = labels.iter().map(|l| l.label.as_str()).collect();
        assert_eq!(set.len(), labels.len());
    }

    #[test]
    fn equal_count_conflict_goes_to_lower_topic_index() {
        let clusters = vec![
            cluster(0, &[("food", 5), ("aa", 1)]),
            cluster(1, &[("food", 5), ("bb", 1)]),
        ];
        let labels = assign_labels(&clusters);
        assert_eq!(labels[0].label, "food");
        assert_eq!(labels[1].label, "bb");
    }

    #[test]
    fn empty_clusters_get_fallback_labels() {
        let clusters = vec![cluster(0, &[]), cluster(1, &[]), cluster(2, &[])];
        let labels = assign_labels(&clusters);
        assert_eq!(labels[0].label, "topic-0");
        assert_eq!(labels[1].label, "topic-1");
        assert_eq!(labels[2].label, "topic-2");
        assert!(labels.iter().all(|l| l.is_fallback()));
    }

    #[test]
    fn exhausted_cluster_falls_back() {
        let clusters = vec![
            cluster(0, &[("food", 5)]),
            cluster(1, &[("food", 4)]),
        ];
        let labels = assign_labels(&clusters);
        assert_eq!(labels[0].label, "food");
        assert_eq!(labels[1].label, "topic-1");
        assert_eq!(labels[1].rank_used, 1);
    }

    #[test]
    fn labels_always_pairwise_distinct() {
        let clusters = vec![
            cluster(0, &[("aa", 3), ("bb", 3)]),
            cluster(1, &[("aa", 3), ("bb", 3)]),
            cluster(2, &[("aa", 3), ("bb", 3)]),
            cluster(3, &[]),
        ];
        let labels = assign_labels(&clusters);
        let set: HashSet<&str> = labels.iter().map(|l| l.label.as_str()).collect();
        assert_eq!(set.len(), labels.len());
        // non-fallback labels carry their own cluster count
        for l in labels.iter().filter(|l| !l.is_fallback()) {
            assert_eq!(clusters[l.topic].unigram_counts[&l.label], l.label_count);
        }
    }
}
