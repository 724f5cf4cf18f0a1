//! End-to-end build: load → split → normalize → expand pairs → classify →
//! index → (optionally) precompute similar entities → save.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{self, Corpus, CorpusError, EntityType, LoadSummary};
use crate::graph::{BipartiteGraph, GraphError, SimRankCache, SimRankParams, DEFAULT_SIMILAR_K};
use crate::index::{build_index, IndexError, InvertedIndex};
use crate::matching::DEFAULT_MIN_SIMILARITY;
use crate::normalization::build_equivalence_classes;
use crate::parallel::{map_slice, Execution};
use crate::relex::{self, ClassifierKind, CueBaseline, ExternalScores, OracleClassifier, RelationClassifier, RelationPrediction, RelexError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("corpus stage: {0}")]
    Corpus(#[from] CorpusError),
    #[error("classification stage: {0}")]
    Relex(#[from] RelexError),
    #[error("index stage: {0}")]
    Index(#[from] IndexError),
    #[error("graph stage: {0}")]
    Graph(#[from] GraphError),
}

impl PipelineError {
    /// Whether the failure is a configuration problem rather than bad data.
    pub fn is_config(&self) -> bool {
        matches!(self, PipelineError::Config(_) | PipelineError::Relex(RelexError::ModelUnavailable(_)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusSource {
    /// JSON-lines corpus; `gold` is a label sidecar used by the oracle.
    Annotated { corpus: PathBuf, gold: Option<PathBuf> },
    /// Directory holding the ChemProt abstracts/entities/relations files.
    ChemProt { dir: PathBuf },
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub source: CorpusSource,
    pub classifier: ClassifierKind,
    /// Score sidecar for the external classifier.
    pub predictions: Option<PathBuf>,
    pub index_path: Option<PathBuf>,
    pub min_similarity: f64,
    pub simrank: SimRankParams,
    pub precompute_similar: bool,
    pub exec: Execution,
}

impl PipelineConfig {
    pub fn new(source: CorpusSource, classifier: ClassifierKind) -> Self {
        PipelineConfig {
            source,
            classifier,
            predictions: None,
            index_path: None,
            min_similarity: DEFAULT_MIN_SIMILARITY,
            simrank: SimRankParams::default(),
            precompute_similar: false,
            exec: Execution::default(),
        }
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let config = |msg: String| Err(PipelineError::Config(msg));
        let must_exist = |p: &Path, what: &str| {
            if p.exists() {
                Ok(())
            } else {
                config(format!("{what} {} does not exist", p.display()))
            }
        };
        match &self.source {
            CorpusSource::Annotated { corpus, gold } => {
                must_exist(corpus, "corpus")?;
                if let Some(g) = gold {
                    must_exist(g, "gold file")?;
                } else if self.classifier == ClassifierKind::Oracle {
                    return config("the oracle classifier needs a gold file".into());
                }
            }
            CorpusSource::ChemProt { dir } => {
                if !dir.is_dir() {
                    return config(format!("ChemProt directory {} does not exist", dir.display()));
                }
            }
        }
        match (&self.classifier, &self.predictions) {
            (ClassifierKind::External, None) => return config("the external classifier needs a predictions file".into()),
            (ClassifierKind::External, Some(p)) => must_exist(p, "predictions file")?,
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.min_similarity) {
            return config(format!("min similarity must lie in [0, 1], got {}", self.min_similarity));
        }
        self.simrank.validate().or_else(|e| config(e.to_string()))?;
        if let Some(parent) = self.index_path.as_deref().and_then(Path::parent) {
            if !parent.as_os_str().is_empty() && !parent.is_dir() {
                return config(format!("index directory {} does not exist", parent.display()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub classifier: String,
    pub documents: usize,
    pub sentences: usize,
    pub mentions: usize,
    pub classes: usize,
    pub chemical_classes: usize,
    pub protein_classes: usize,
    pub instances: usize,
    pub skipped_pairs: usize,
    pub positive_instances: usize,
    pub index_keys: usize,
    pub postings: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chemprot: Option<ChemProtReport>,
    pub fingerprint: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChemProtReport {
    #[serde(flatten)]
    pub load: LoadSummary,
    pub duplicate_relations: usize,
}

impl BuildReport {
    /// (label, value) rows for text output.
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        let mut rows = vec![
            ("classifier", self.classifier.clone()),
            ("documents", self.documents.to_string()),
            ("sentences", self.sentences.to_string()),
            ("mentions", self.mentions.to_string()),
            ("classes", self.classes.to_string()),
            ("chemical_classes", self.chemical_classes.to_string()),
            ("protein_classes", self.protein_classes.to_string()),
            ("instances", self.instances.to_string()),
            ("skipped_pairs", self.skipped_pairs.to_string()),
            ("positive_instances", self.positive_instances.to_string()),
            ("index_keys", self.index_keys.to_string()),
            ("postings", self.postings.to_string()),
        ];
        if let Some(cp) = &self.chemprot {
            rows.push(("relations_in_file", cp.load.relations_in_file.to_string()));
            rows.push(("dropped_not_cosentential", cp.load.dropped_not_cosentential.to_string()));
            rows.push(("entities_spanning_sentences", cp.load.entities_spanning_sentences.to_string()));
            rows.push(("duplicate_relations", cp.duplicate_relations.to_string()));
        }
        rows.push(("fingerprint", self.fingerprint.clone()));
        rows
    }
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub index: InvertedIndex,
    pub predictions: Vec<RelationPrediction>,
    pub report: BuildReport,
}

/// Runs the whole build. The configuration, including the classifier
/// handle and its inputs, is validated before any corpus data is read.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let exec = config.exec;

    let external = match (&config.classifier, &config.predictions) {
        (ClassifierKind::External, Some(p)) => Some(ExternalScores::load(p)?),
        _ => None,
    };

    let (corpus, gold, chemprot) = match &config.source {
        CorpusSource::Annotated { corpus, gold } => {
            let corpus = corpus::load_annotated_corpus(corpus, exec)?;
            let gold = gold.as_deref().map(relex::read_gold_tsv).transpose()?;
            (corpus, gold, None)
        }
        CorpusSource::ChemProt { dir } => {
            let loaded = corpus::parse_chemprot(dir, exec)?;
            let deduped = corpus::dedup_relations(&loaded.relations, &loaded.corpus);
            let report = ChemProtReport { load: loaded.summary.clone(), duplicate_relations: loaded.relations.len() - deduped.len() };
            let oracle = OracleClassifier::from_relations(&loaded.relations);
            (loaded.corpus, None, Some((report, oracle)))
        }
    };

    let model: Box<dyn RelationClassifier> = match config.classifier {
        ClassifierKind::Oracle => match (gold, &chemprot) {
            (Some(labels), _) => Box::new(OracleClassifier::new(labels)),
            (None, Some((_, oracle))) => Box::new(oracle.clone()),
            (None, None) => return Err(PipelineError::Config("the oracle classifier needs gold labels".into())),
        },
        ClassifierKind::CueBaseline => Box::new(CueBaseline),
        ClassifierKind::External => Box::new(external.expect("validated")),
    };

    build_from_corpus(corpus, model.as_ref(), config, chemprot.map(|(r, _)| r))
}

fn build_from_corpus(
    corpus: Corpus,
    model: &dyn RelationClassifier,
    config: &PipelineConfig,
    chemprot: Option<ChemProtReport>,
) -> Result<PipelineOutput, PipelineError> {
    let exec = config.exec;
    let (classes, assignment) = build_equivalence_classes(&corpus.mentions);

    let groups = corpus.mentions_by_sentence();
    let expansions = map_slice(exec, &groups, |(sentence, mentions)| relex::expand_pairs(sentence, mentions));
    let skipped_pairs = expansions.iter().map(|e| e.skipped).sum();
    let instances: Vec<_> = expansions.into_iter().flat_map(|e| e.instances).collect();
    let predictions = relex::classify_batch(&instances, model, exec)?;

    let chemical_classes = classes.as_slice().iter().filter(|c| c.etype == EntityType::Chemical).count();
    let class_count = classes.len();
    let mut index = build_index(&corpus, classes, &assignment, &predictions)?;

    if config.precompute_similar {
        let graph = Arc::new(BipartiteGraph::from_index(&index)?);
        let cache = SimRankCache::new(graph, config.simrank)?;
        index.set_similar(Some(cache.precompute(DEFAULT_SIMILAR_K, exec)));
    }
    if let Some(path) = &config.index_path {
        index.save(path)?;
    }

    let report = BuildReport {
        classifier: model.name().to_string(),
        documents: corpus.documents.len(),
        sentences: corpus.sentences.len(),
        mentions: corpus.mentions.len(),
        classes: class_count,
        chemical_classes,
        protein_classes: class_count - chemical_classes,
        instances: instances.len(),
        skipped_pairs,
        positive_instances: predictions.iter().filter(|p| p.label.is_positive()).count(),
        index_keys: index.key_count(),
        postings: index.posting_count(),
        chemprot,
        fingerprint: index.fingerprint(),
    };
    Ok(PipelineOutput { index, predictions, report })
}
