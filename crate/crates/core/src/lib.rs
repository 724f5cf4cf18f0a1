//! Relation-oriented literature search.
//!
//! The crate turns entity-annotated abstracts into an inverted index keyed by
//! related chemical–protein pairs, resolves free-text queries against the
//! indexed entity classes with trigram generalized Jaccard matching, and
//! suggests structurally similar entities with SimRank over the bipartite
//! relation graph.
//!
//! Data-parallel loops (batch classification, candidate scoring, all-node
//! breadth-first search, per-component SimRank) run on rayon when the
//! `parallel` feature is enabled and fall back to plain iterators otherwise.
//! Every entry point that fans out takes an [`Execution`] so both paths can be
//! exercised from the same build.

pub mod corpus;
pub mod graph;
pub mod index;
pub mod matching;
pub mod normalization;
pub mod parallel;
pub mod pipeline;
pub mod relex;
pub mod search;

pub use corpus::{BinaryLabel, CprLabel, Document, EntityMention, EntityType, GoldRelation, Sentence};
pub use graph::{BipartiteGraph, GraphStats, SimRankCache, SimRankParams, SimRankScores};
pub use index::{InvertedIndex, Posting, RelationKey};
pub use matching::{MatchResult, Matcher, TrigramProfile};
pub use normalization::{ClassId, EntityClass, EntityClasses};
pub use parallel::Execution;
pub use pipeline::{BuildReport, CorpusSource, PipelineConfig};
pub use relex::{ClassifierKind, EvalMetrics, RelationPrediction, TaggedInstance};
pub use search::{SearchEngine, SearchOptions, SearchResponse};
