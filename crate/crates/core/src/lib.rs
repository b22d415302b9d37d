//! Topic discovery and automatic labeling for short-text corpora.
//!
//! The crate implements the full pipeline: CSV ingestion, a ten-step text
//! normalizer, rule-based aspect-term extraction, LDA trained by collapsed
//! Gibbs sampling, coherence-based selection of the topic count, top-unigram
//! topic labeling with conflict resolution, accuracy/confusion evaluation
//! against gold labels, and a Jensen-Shannon / MDS intertopic map.
//!
//! Every stage is deterministic given its inputs and a seed; the [`pipeline`]
//! module wires the stages together and writes versioned artifacts.

pub mod aspect;
pub mod coherence;
pub mod eval;
pub mod geometry;
pub mod ingest;
pub mod labeling;
pub mod pipeline;
pub mod preprocess;
pub mod topicmodel;

pub use aspect::{AspectTerm, PosTag, PosTagger, TaggedToken};
pub use coherence::{CoherenceMetric, CoherenceReport};
pub use eval::ConfusionMatrix;
pub use geometry::TopicMap;
pub use ingest::{GoldLabelSet, RawTweet};
pub use labeling::{AspectCluster, TopicLabel};
pub use pipeline::RunConfig;
pub use preprocess::{CleanDoc, NonAsciiPolicy, PipelineConfig};
pub use topicmodel::{BowDoc, DominantAssignment, LdaModel, TrainConfig, Vocabulary};
