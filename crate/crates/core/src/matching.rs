//! Typo-tolerant query resolution: character trigram multisets compared with
//! generalized Jaccard similarity, `Σ min(Qᵢ, Mᵢ) / Σ max(Qᵢ, Mᵢ)` over the
//! per-trigram counts of query and mention.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::normalization::{normalize_text, ClassId, EntityClasses};
use crate::parallel::{map_slice, Execution};

/// Default minimum similarity for a fuzzy match.
pub const DEFAULT_MIN_SIMILARITY: f64 = 0.30;

/// Multiset of character trigrams of a normalized string, stored sorted by
/// gram.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrigramProfile {
    grams: Vec<(String, u32)>,
    source_length: usize,
}

impl TrigramProfile {
    pub fn grams(&self) -> &[(String, u32)] {
        &self.grams
    }

    pub fn count(&self, gram: &str) -> u32 {
        self.grams.binary_search_by(|(g, _)| g.as_str().cmp(gram)).map_or(0, |i| self.grams[i].1)
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.grams.iter().map(|&(_, c)| u64::from(c)).sum()
    }

    /// Length in scalars of the normalized source string.
    pub fn source_length(&self) -> usize {
        self.source_length
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }
}

/// Sliding width-3 window over the normalized string. Strings shorter than
/// three scalars yield one pseudo-gram holding the whole string; the empty
/// string yields the empty profile.
pub fn trigram_profile(s: &str) -> TrigramProfile {
    let chars: Vec<char> = normalize_text(s).chars().collect();
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    if chars.len() >= 3 {
        for w in chars.windows(3) {
            *counts.entry(w.iter().collect()).or_insert(0) += 1;
        }
    } else if !chars.is_empty() {
        counts.insert(chars.iter().collect(), 1);
    }
    TrigramProfile { grams: counts.into_iter().collect(), source_length: chars.len() }
}

/// Generalized Jaccard similarity of two profiles; 0 when both are empty.
pub fn generalized_jaccard(q: &TrigramProfile, m: &TrigramProfile) -> f64 {
    let (a, b) = (&q.grams, &m.grams);
    let (mut i, mut j) = (0, 0);
    let (mut min_sum, mut max_sum) = (0u64, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                max_sum += u64::from(a[i].1);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                max_sum += u64::from(b[j].1);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                min_sum += u64::from(a[i].1.min(b[j].1));
                max_sum += u64::from(a[i].1.max(b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    max_sum += a[i..].iter().chain(&b[j..]).map(|&(_, c)| u64::from(c)).sum::<u64>();
    if max_sum == 0 {
        0.0
    } else {
        min_sum as f64 / max_sum as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub class_id: ClassId,
    pub matched_surface: String,
    pub similarity: f64,
}

#[derive(Debug, Clone)]
struct Candidate {
    class_id: ClassId,
    text: String,
    profile: TrigramProfile,
}

/// Precomputed profiles of every class alias (member surfaces and external
/// ids) plus a trigram → candidate map for pruning.
#[derive(Debug, Clone, Default)]
pub struct Matcher {
    candidates: Vec<Candidate>,
    by_gram: HashMap<String, Vec<u32>>,
}

impl Matcher {
    pub fn new(classes: &EntityClasses) -> Self {
        let candidates: Vec<Candidate> = classes
            .as_slice()
            .iter()
            .flat_map(|c| {
                c.aliases().map(move |alias| Candidate { class_id: c.class_id, text: alias.to_string(), profile: trigram_profile(alias) })
            })
            .collect();
        let mut by_gram: HashMap<String, Vec<u32>> = HashMap::new();
        for (i, cand) in candidates.iter().enumerate() {
            for (gram, _) in cand.profile.grams() {
                by_gram.entry(gram.clone()).or_default().push(i as u32);
            }
        }
        Matcher { candidates, by_gram }
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    /// Classes matching `query`, best first.
    ///
    /// An exact (normalized) alias hit returns only the owning classes at
    /// similarity 1.0. Otherwise every alias sharing a trigram with the query
    /// is scored, each class keeps its best alias, and classes at or above
    /// `min_similarity` are returned by descending similarity, ties by
    /// canonical mention.
    pub fn resolve_query(&self, classes: &EntityClasses, query: &str, min_similarity: f64, exec: Execution) -> Vec<MatchResult> {
        let key = normalize_text(query);
        let exact = classes.classes_for_alias(&key);
        if !exact.is_empty() {
            let mut hits: Vec<MatchResult> = exact
                .iter()
                .filter_map(|&id| {
                    let class = classes.get(id)?;
                    let surface = class.aliases().filter(|a| normalize_text(a) == key).min()?;
                    Some(MatchResult { class_id: id, matched_surface: surface.to_string(), similarity: 1.0 })
                })
                .collect();
            sort_results(&mut hits, classes);
            return hits;
        }

        let profile = trigram_profile(&key);
        let mut pool: Vec<u32> = profile.grams().iter().filter_map(|(g, _)| self.by_gram.get(g)).flatten().copied().collect();
        pool.sort_unstable();
        pool.dedup();
        let scored = map_slice(exec, &pool, |&i| generalized_jaccard(&profile, &self.candidates[i as usize].profile));

        let mut best: HashMap<ClassId, MatchResult> = HashMap::new();
        for (&i, similarity) in pool.iter().zip(scored) {
            if similarity < min_similarity {
                continue;
            }
            let cand = &self.candidates[i as usize];
            let better = |cur: &MatchResult| similarity > cur.similarity || (similarity == cur.similarity && cand.text < cur.matched_surface);
            if best.get(&cand.class_id).is_none_or(better) {
                best.insert(cand.class_id, MatchResult { class_id: cand.class_id, matched_surface: cand.text.clone(), similarity });
            }
        }
        let mut results: Vec<MatchResult> = best.into_values().collect();
        sort_results(&mut results, classes);
        results
    }
}

fn sort_results(results: &mut [MatchResult], classes: &EntityClasses) {
    results.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| classes.canonical(a.class_id).cmp(classes.canonical(b.class_id)))
            .then(a.class_id.cmp(&b.class_id))
    });
}
