//! The relation-oriented inverted index: related (chemical, protein) class
//! pairs mapped to the sentences that evidence them, plus per-class partner
//! lists ranked by co-mention count.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Corpus, EntityType};
use crate::normalization::{ClassAssignment, ClassId, EntityClass, EntityClasses};
use crate::relex::RelationPrediction;

pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_PREFIX: &str = "sha256:";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("dangling reference: {0}")]
    Dangling(String),
    #[error("unknown class id {0}")]
    UnknownClass(ClassId),
    #[error("relation key ({chem}, {prot}) does not join a chemical to a protein")]
    KeyDiscipline { chem: ClassId, prot: ClassId },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported index format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u64 },
    #[error("index checksum mismatch or missing checksum line")]
    Checksum,
    #[error("index file is not valid: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationKey {
    pub chem_class_id: ClassId,
    pub prot_class_id: ClassId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posting {
    pub doc_id: String,
    pub sent_index: usize,
    pub sentence_text: String,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partner {
    pub class_id: ClassId,
    pub co_mention_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
}

/// Same-type similarity lists computed at build time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarTable {
    pub decay: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub k: usize,
    pub lists: BTreeMap<ClassId, Vec<(ClassId, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    classes: EntityClasses,
    postings: BTreeMap<RelationKey, Vec<Posting>>,
    partners: BTreeMap<ClassId, Vec<Partner>>,
    manifest: BTreeMap<String, DocMeta>,
    similar: Option<SimilarTable>,
}

/// Builds the index from classified pairs.
///
/// Only positive predictions contribute. Each (key, document, sentence)
/// yields one posting; several positive pairs of the same two classes in one
/// sentence collapse into it, keeping the highest score.
pub fn build_index(
    corpus: &Corpus,
    classes: EntityClasses,
    assignment: &ClassAssignment,
    predictions: &[RelationPrediction],
) -> Result<InvertedIndex, IndexError> {
    let class_of = |mention_id: &str| {
        assignment.get(mention_id).copied().ok_or_else(|| IndexError::Dangling(format!("mention {mention_id} has no class")))
    };
    let mut grouped: BTreeMap<RelationKey, BTreeMap<(String, usize), Posting>> = BTreeMap::new();
    for p in predictions.iter().filter(|p| p.label.is_positive()) {
        let key = RelationKey { chem_class_id: class_of(&p.key.chem_mention_id)?, prot_class_id: class_of(&p.key.prot_mention_id)? };
        check_key(&classes, key)?;
        let sentence = corpus
            .sentence(&p.key.doc_id, p.key.sent_index)
            .ok_or_else(|| IndexError::Dangling(format!("sentence {}#{}", p.key.doc_id, p.key.sent_index)))?;
        let slot = grouped.entry(key).or_default();
        slot.entry((p.key.doc_id.clone(), p.key.sent_index))
            .and_modify(|posting| posting.score = posting.score.max(p.score))
            .or_insert_with(|| Posting {
                doc_id: p.key.doc_id.clone(),
                sent_index: p.key.sent_index,
                sentence_text: sentence.text.clone(),
                score: p.score,
            });
    }
    let postings = grouped.into_iter().map(|(k, by_sentence)| (k, by_sentence.into_values().collect())).collect();
    let manifest = corpus
        .documents
        .iter()
        .map(|d| (d.doc_id.clone(), DocMeta { title: d.title.clone(), source_url: d.source_url.clone() }))
        .collect();
    Ok(InvertedIndex::from_parts(classes, postings, manifest))
}

fn check_key(classes: &EntityClasses, key: RelationKey) -> Result<(), IndexError> {
    let chem = classes.get(key.chem_class_id).ok_or(IndexError::UnknownClass(key.chem_class_id))?;
    let prot = classes.get(key.prot_class_id).ok_or(IndexError::UnknownClass(key.prot_class_id))?;
    if chem.etype != EntityType::Chemical || prot.etype != EntityType::Protein {
        return Err(IndexError::KeyDiscipline { chem: key.chem_class_id, prot: key.prot_class_id });
    }
    Ok(())
}

fn derive_partners(classes: &EntityClasses, postings: &BTreeMap<RelationKey, Vec<Posting>>) -> BTreeMap<ClassId, Vec<Partner>> {
    let mut partners: BTreeMap<ClassId, Vec<Partner>> = BTreeMap::new();
    for (key, list) in postings {
        let count = list.len() as u32;
        partners.entry(key.chem_class_id).or_default().push(Partner { class_id: key.prot_class_id, co_mention_count: count });
        partners.entry(key.prot_class_id).or_default().push(Partner { class_id: key.chem_class_id, co_mention_count: count });
    }
    for list in partners.values_mut() {
        list.sort_by(|a, b| {
            b.co_mention_count
                .cmp(&a.co_mention_count)
                .then_with(|| classes.canonical(a.class_id).cmp(classes.canonical(b.class_id)))
                .then(a.class_id.cmp(&b.class_id))
        });
    }
    partners
}

impl InvertedIndex {
    fn from_parts(
        classes: EntityClasses,
        postings: BTreeMap<RelationKey, Vec<Posting>>,
        manifest: BTreeMap<String, DocMeta>,
    ) -> Self {
        let partners = derive_partners(&classes, &postings);
        InvertedIndex { classes, postings, partners, manifest, similar: None }
    }

    pub fn classes(&self) -> &EntityClasses {
        &self.classes
    }

    pub fn class(&self, id: ClassId) -> Option<&EntityClass> {
        self.classes.get(id)
    }

    pub fn keys(&self) -> impl Iterator<Item = RelationKey> + '_ {
        self.postings.keys().copied()
    }

    pub fn key_count(&self) -> usize {
        self.postings.len()
    }

    pub fn posting_count(&self) -> usize {
        self.postings.values().map(Vec::len).sum()
    }

    pub fn documents(&self) -> &BTreeMap<String, DocMeta> {
        &self.manifest
    }

    pub fn document(&self, doc_id: &str) -> Option<&DocMeta> {
        self.manifest.get(doc_id)
    }

    /// Partners of `class_id` by descending co-mention count, ties by
    /// canonical mention.
    pub fn related_entities(&self, class_id: ClassId) -> Result<&[Partner], IndexError> {
        if self.classes.get(class_id).is_none() {
            return Err(IndexError::UnknownClass(class_id));
        }
        Ok(self.partners.get(&class_id).map_or(&[], Vec::as_slice))
    }

    /// Evidence for a pair, ordered by (doc_id, sent_index). Empty when the
    /// pair was never related.
    pub fn postings_for(&self, key: RelationKey) -> &[Posting] {
        self.postings.get(&key).map_or(&[], Vec::as_slice)
    }

    /// Orients a (class, partner) pair into a key regardless of which side
    /// is the chemical.
    pub fn key_between(&self, a: ClassId, b: ClassId) -> Option<RelationKey> {
        let (ea, eb) = (self.classes.get(a)?.etype, self.classes.get(b)?.etype);
        match (ea, eb) {
            (EntityType::Chemical, EntityType::Protein) => Some(RelationKey { chem_class_id: a, prot_class_id: b }),
            (EntityType::Protein, EntityType::Chemical) => Some(RelationKey { chem_class_id: b, prot_class_id: a }),
            _ => None,
        }
    }

    pub fn similar(&self) -> Option<&SimilarTable> {
        self.similar.as_ref()
    }

    pub fn set_similar(&mut self, table: Option<SimilarTable>) {
        self.similar = table;
    }

    fn to_file(&self) -> IndexFile {
        IndexFile {
            format_version: FORMAT_VERSION,
            classes: self.classes.as_slice().to_vec(),
            partners: self.partners.clone(),
            postings: self
                .postings
                .iter()
                .map(|(k, v)| KeyPostings { chem_class_id: k.chem_class_id, prot_class_id: k.prot_class_id, postings: v.clone() })
                .collect(),
            manifest: self.manifest.clone(),
            similar: self.similar.clone(),
        }
    }

    /// The JSON body of the index file.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("index serializes")
    }

    /// Hex SHA-256 of the JSON body; identical to the checksum line on disk.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        let body = self.to_json();
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        writeln!(out, "{body}")?;
        writeln!(out, "{CHECKSUM_PREFIX}{digest}")
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let io = |source| IndexError::Io { path: path.to_path_buf(), source };
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(io)?;
        fs::write(path, buf).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let text = fs::read_to_string(path).map_err(|source| IndexError::Io { path: path.to_path_buf(), source })?;
        Self::from_text(&text)
    }

    /// Parses an index file: JSON body, newline, `sha256:<hex>` line.
    pub fn from_text(text: &str) -> Result<Self, IndexError> {
        let (body, checksum) = text.trim_end_matches('\n').rsplit_once('\n').ok_or(IndexError::Checksum)?;
        let expected = checksum.trim().strip_prefix(CHECKSUM_PREFIX).ok_or(IndexError::Checksum)?;
        if hex::encode(Sha256::digest(body.as_bytes())) != expected {
            return Err(IndexError::Checksum);
        }
        let value: serde_json::Value = serde_json::from_str(body).map_err(|e| IndexError::Parse(e.to_string()))?;
        let found = value.get("format_version").and_then(serde_json::Value::as_u64).unwrap_or(0);
        if found != u64::from(FORMAT_VERSION) {
            return Err(IndexError::Version { found });
        }
        let file: IndexFile = serde_json::from_value(value).map_err(|e| IndexError::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    fn from_file(file: IndexFile) -> Result<Self, IndexError> {
        for (i, c) in file.classes.iter().enumerate() {
            if c.class_id as usize != i {
                return Err(IndexError::Parse(format!("class at position {i} has id {}", c.class_id)));
            }
        }
        let classes = EntityClasses::new(file.classes);
        let mut postings = BTreeMap::new();
        for kp in file.postings {
            let key = RelationKey { chem_class_id: kp.chem_class_id, prot_class_id: kp.prot_class_id };
            check_key(&classes, key)?;
            for p in &kp.postings {
                if !file.manifest.contains_key(&p.doc_id) {
                    return Err(IndexError::Dangling(format!("posting references unknown document {}", p.doc_id)));
                }
            }
            postings.insert(key, kp.postings);
        }
        let index = InvertedIndex::from_parts(classes, postings, file.manifest);
        if index.partners != file.partners {
            return Err(IndexError::Parse("partner table disagrees with postings".into()));
        }
        Ok(InvertedIndex { similar: file.similar, ..index })
    }
}

#[derive(Serialize, Deserialize)]
struct KeyPostings {
    chem_class_id: ClassId,
    prot_class_id: ClassId,
    postings: Vec<Posting>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexFile {
    format_version: u32,
    classes: Vec<EntityClass>,
    partners: BTreeMap<ClassId, Vec<Partner>>,
    postings: Vec<KeyPostings>,
    manifest: BTreeMap<String, DocMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    similar: Option<SimilarTable>,
}

/// Per-class co-mention totals, used by the accounting checks.
pub fn partner_totals(index: &InvertedIndex) -> HashMap<ClassId, u64> {
    index.partners.iter().map(|(&c, list)| (c, list.iter().map(|p| u64::from(p.co_mention_count)).sum())).collect()
}
