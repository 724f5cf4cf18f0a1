//! Query answering over a loaded index: resolve the query to a class, list
//! its related partners with evidence, and suggest similar entities.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::EntityType;
use crate::graph::{BipartiteGraph, GraphError, SimRankCache, SimRankParams, DEFAULT_SIMILAR_K};
use crate::index::InvertedIndex;
use crate::matching::{Matcher, DEFAULT_MIN_SIMILARITY};
use crate::normalization::ClassId;
use crate::parallel::Execution;

/// Evidence sentences returned per partner unless asked otherwise.
pub const DEFAULT_EVIDENCE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Number of similar entities.
    pub k: usize,
    pub min_similarity: f64,
    pub evidence_limit: usize,
    /// Evidence offset applied to every partner.
    pub offset: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { k: DEFAULT_SIMILAR_K, min_similarity: DEFAULT_MIN_SIMILARITY, evidence_limit: DEFAULT_EVIDENCE_LIMIT, offset: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedEntity {
    pub class_id: ClassId,
    pub canonical: String,
    pub etype: EntityType,
    pub external_ids: Vec<String>,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub doc_id: String,
    pub sent_index: usize,
    pub title: String,
    pub source_url: Option<String>,
    pub sentence_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelatedEntity {
    pub class_id: ClassId,
    pub canonical: String,
    pub etype: EntityType,
    pub co_mention_count: u32,
    /// Evidence sentences available in total; `evidence` holds one page.
    pub total: usize,
    pub offset: usize,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarEntity {
    pub class_id: ClassId,
    pub canonical: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub matched: Option<MatchedEntity>,
    pub related: Vec<RelatedEntity>,
    pub similar: Vec<SimilarEntity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCount {
    pub surface: String,
    pub count: u32,
}

/// Everything known about one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityCard {
    pub class_id: ClassId,
    pub canonical: String,
    pub etype: EntityType,
    pub surfaces: Vec<SurfaceCount>,
    pub external_ids: Vec<String>,
    /// Number of distinct related partners.
    pub degree: usize,
}

/// Shared, read-only search state. The SimRank cache is the only part that
/// changes after construction, and it fills in lazily per component.
#[derive(Debug)]
pub struct SearchEngine {
    index: Arc<InvertedIndex>,
    matcher: Matcher,
    similarity: SimRankCache,
    fingerprint: String,
    exec: Execution,
}

impl SearchEngine {
    pub fn new(index: InvertedIndex, params: SimRankParams, exec: Execution) -> Result<Self, GraphError> {
        let graph = Arc::new(BipartiteGraph::from_index(&index)?);
        let similarity = SimRankCache::new(graph, params)?;
        let matcher = Matcher::new(index.classes());
        let fingerprint = index.fingerprint();
        Ok(SearchEngine { index: Arc::new(index), matcher, similarity, fingerprint, exec })
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn graph(&self) -> &BipartiteGraph {
        self.similarity.graph()
    }

    pub fn simrank(&self) -> &SimRankCache {
        &self.similarity
    }

    /// Hex SHA-256 of the loaded index body.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn search(&self, query: &str, options: &SearchOptions) -> SearchResponse {
        let classes = self.index.classes();
        let best = self.matcher.resolve_query(classes, query, options.min_similarity, self.exec).into_iter().next();
        let Some(best) = best else {
            return SearchResponse { query: query.to_string(), matched: None, related: vec![], similar: vec![] };
        };
        let class = classes.get(best.class_id).expect("matcher returns known classes");
        let matched = MatchedEntity {
            class_id: class.class_id,
            canonical: class.canonical.clone(),
            etype: class.etype,
            external_ids: class.external_ids.iter().cloned().collect(),
            similarity: best.similarity,
        };
        SearchResponse {
            query: query.to_string(),
            matched: Some(matched),
            related: self.related(best.class_id, options),
            similar: self.similar(best.class_id, options.k),
        }
    }

    /// Partners in index order (no re-sorting here), each with one page of
    /// evidence.
    fn related(&self, id: ClassId, options: &SearchOptions) -> Vec<RelatedEntity> {
        let classes = self.index.classes();
        let partners = self.index.related_entities(id).unwrap_or_default();
        partners
            .iter()
            .map(|p| {
                let key = self.index.key_between(id, p.class_id).expect("partners have the other etype");
                let postings = self.index.postings_for(key);
                let evidence = postings
                    .iter()
                    .skip(options.offset)
                    .take(options.evidence_limit)
                    .map(|post| {
                        let meta = self.index.document(&post.doc_id);
                        Evidence {
                            doc_id: post.doc_id.clone(),
                            sent_index: post.sent_index,
                            title: meta.map(|m| m.title.clone()).unwrap_or_default(),
                            source_url: meta.and_then(|m| m.source_url.clone()),
                            sentence_text: post.sentence_text.clone(),
                        }
                    })
                    .collect();
                let partner = classes.get(p.class_id).expect("partner classes exist");
                RelatedEntity {
                    class_id: p.class_id,
                    canonical: partner.canonical.clone(),
                    etype: partner.etype,
                    co_mention_count: p.co_mention_count,
                    total: postings.len(),
                    offset: options.offset,
                    evidence,
                }
            })
            .collect()
    }

    fn similar(&self, id: ClassId, k: usize) -> Vec<SimilarEntity> {
        if !self.graph().contains(id) || k == 0 {
            return vec![];
        }
        let params = self.similarity.params();
        let stored = self.index.similar().filter(|t| {
            t.k >= k && t.decay == params.decay && t.max_iterations == params.max_iterations && t.tolerance == params.tolerance
        });
        let list = match stored {
            Some(table) => table.lists.get(&id).map(|l| l.iter().take(k).copied().collect()).unwrap_or_default(),
            None => self.similarity.top_similar(id, k).unwrap_or_default(),
        };
        list.into_iter()
            .map(|(class_id, score)| SimilarEntity { class_id, canonical: self.index.classes().canonical(class_id).to_string(), score })
            .collect()
    }

    pub fn entity_card(&self, id: ClassId) -> Option<EntityCard> {
        let class = self.index.class(id)?;
        let mut surfaces: Vec<SurfaceCount> =
            class.surface_counts.iter().map(|(s, &c)| SurfaceCount { surface: s.clone(), count: c }).collect();
        surfaces.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.surface.cmp(&b.surface)));
        Some(EntityCard {
            class_id: id,
            canonical: class.canonical.clone(),
            etype: class.etype,
            surfaces,
            external_ids: class.external_ids.iter().cloned().collect(),
            degree: self.index.related_entities(id).map_or(0, <[_]>::len),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document, EntityMention, Sentence};
    use crate::index::build_index;
    use crate::normalization::build_equivalence_classes;
    use crate::relex::{InstanceKey, RelationPrediction};

    fn mention(id: &str, doc: &str, surface: &str, etype: EntityType, ids: &[&str]) -> EntityMention {
        EntityMention {
            mention_id: id.into(),
            doc_id: doc.into(),
            sent_index: 0,
            start: 0,
            end: surface.chars().count(),
            surface: surface.into(),
            etype,
            external_ids: ids.iter().map(|s| s.to_string()).collect(),
        }
    }

    // two documents: drugA–kinase (x2), drugB–kinase (x1), drugB–receptor (x1)
    fn engine() -> SearchEngine {
        let docs: Vec<Document> = ["D1", "D2"]
            .iter()
            .map(|d| Document { doc_id: d.to_string(), title: format!("title {d}"), body: "s".into(), source_url: Some(format!("https://x/{d}")) })
            .collect();
        let sentences: Vec<Sentence> = ["D1", "D2"]
            .iter()
            .map(|d| Sentence { doc_id: d.to_string(), sent_index: 0, start: 0, end: 1, text: format!("sentence of {d}") })
            .collect();
        let mentions = vec![
            mention("a1", "D1", "drugA", EntityType::Chemical, &["MESH:A"]),
            mention("k1", "D1", "kinase", EntityType::Protein, &[]),
            mention("a2", "D2", "drugA", EntityType::Chemical, &[]),
            mention("k2", "D2", "kinase", EntityType::Protein, &[]),
            mention("b2", "D2", "drugB", EntityType::Chemical, &[]),
            mention("r2", "D2", "receptor", EntityType::Protein, &[]),
        ];
        let corpus = Corpus::new(docs, sentences, mentions);
        let (classes, assignment) = build_equivalence_classes(&corpus.mentions);
        let key = |doc: &str, c: &str, p: &str| InstanceKey { doc_id: doc.into(), sent_index: 0, chem_mention_id: c.into(), prot_mention_id: p.into() };
        let preds = vec![
            RelationPrediction::from_score(key("D1", "a1", "k1"), 0.9),
            RelationPrediction::from_score(key("D2", "a2", "k2"), 0.8),
            RelationPrediction::from_score(key("D2", "b2", "k2"), 0.7),
            RelationPrediction::from_score(key("D2", "b2", "r2"), 0.6),
            RelationPrediction::from_score(key("D2", "a2", "r2"), 0.1),
        ];
        let index = build_index(&corpus, classes, &assignment, &preds).unwrap();
        SearchEngine::new(index, SimRankParams::default(), Execution::Sequential).unwrap()
    }

    #[test]
    fn search_orders_partners_and_pages_evidence() {
        let e = engine();
        let r = e.search("kinase", &SearchOptions::default());
        let m = r.matched.as_ref().unwrap();
        assert_eq!((m.canonical.as_str(), m.similarity), ("kinase", 1.0));
        let names: Vec<(&str, u32)> = r.related.iter().map(|p| (p.canonical.as_str(), p.co_mention_count)).collect();
        assert_eq!(names, vec![("drugA", 2), ("drugB", 1)]);
        assert_eq!(r.related[0].evidence[0].title, "title D1");
        assert_eq!(r.related[0].evidence[0].source_url.as_deref(), Some("https://x/D1"));

        let page = e.search("kinase", &SearchOptions { evidence_limit: 1, offset: 1, ..Default::default() });
        assert_eq!(page.related[0].total, 2);
        assert_eq!(page.related[0].evidence.len(), 1);
        assert_eq!(page.related[0].evidence[0].doc_id, "D2");
    }

    #[test]
    fn similar_and_alias_consistency() {
        let e = engine();
        let by_name = e.search("drugA", &SearchOptions::default());
        assert_eq!(by_name.similar.len(), 1);
        assert_eq!(by_name.similar[0].canonical, "drugB");
        let by_id = e.search("mesh:a", &SearchOptions::default());
        assert_eq!(SearchResponse { query: by_name.query.clone(), ..by_id }, by_name);
    }

    #[test]
    fn no_match_is_well_formed() {
        let r = engine().search("zzzzzz", &SearchOptions::default());
        assert!(r.matched.is_none() && r.related.is_empty() && r.similar.is_empty());
    }

    #[test]
    fn entity_card() {
        let e = engine();
        let id = e.index().classes().lookup_by_alias("drugB").unwrap();
        let card = e.entity_card(id).unwrap();
        assert_eq!(card.degree, 2);
        assert_eq!(card.surfaces, vec![SurfaceCount { surface: "drugB".into(), count: 1 }]);
        assert!(e.entity_card(999).is_none());
    }
}
