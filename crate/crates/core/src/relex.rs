//! Relation-extraction harness: chemical–protein pairs become tagged
//! instances, a pluggable binary classifier scores them, and predictions are
//! scored against gold labels.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{binary_label, BinaryLabel, EntityMention, EntityType, GoldRelation, Sentence};
use crate::parallel::{map_slice, Execution};

pub const CHEM_OPEN: &str = "<e1>";
pub const CHEM_CLOSE: &str = "</e1>";
pub const PROT_OPEN: &str = "<e2>";
pub const PROT_CLOSE: &str = "</e2>";

/// Scores at or above this value are positive.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Lower-case stems; a sentence containing any of them scores 1.0 under the
/// cue baseline.
pub const CUE_STEMS: &[&str] = &[
    "inhibit", "activat", "bind", "regulat", "antagonist", "agonist", "substrate", "cofactor", "block", "suppress",
    "induc", "phosphorylat", "cleav", "modulat",
];

#[derive(Debug, Error)]
pub enum RelexError {
    #[error("entity spans {chem:?} and {prot:?} overlap")]
    Overlap { chem: (usize, usize), prot: (usize, usize) },
    #[error("span {span:?} outside sentence of length {len}")]
    SpanOutOfRange { span: (usize, usize), len: usize },
    #[error("classifier {0:?} is not available (expected oracle, cue-baseline or external)")]
    ModelUnavailable(String),
    #[error("no score for instance {0}")]
    MissingScore(InstanceKey),
    #[error("score {score} for {key} is outside [0, 1]")]
    ScoreOutOfRange { key: InstanceKey, score: f64 },
    #[error("{predictions} predictions but {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} row {row}: {detail}")]
    MalformedRow { path: PathBuf, row: usize, detail: String },
}

/// Identifies one chemical–protein pair within a sentence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceKey {
    pub doc_id: String,
    pub sent_index: usize,
    pub chem_mention_id: String,
    pub prot_mention_id: String,
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{} ({}, {})", self.doc_id, self.sent_index, self.chem_mention_id, self.prot_mention_id)
    }
}

impl From<&GoldRelation> for InstanceKey {
    fn from(r: &GoldRelation) -> Self {
        InstanceKey {
            doc_id: r.doc_id.clone(),
            sent_index: r.sent_index,
            chem_mention_id: r.chem_mention_id.clone(),
            prot_mention_id: r.prot_mention_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedInstance {
    pub key: InstanceKey,
    pub tagged_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationPrediction {
    pub key: InstanceKey,
    pub label: BinaryLabel,
    pub score: f64,
}

impl RelationPrediction {
    pub fn from_score(key: InstanceKey, score: f64) -> Self {
        let label = if score >= DECISION_THRESHOLD { BinaryLabel::Positive } else { BinaryLabel::Negative };
        RelationPrediction { key, label, score }
    }
}

fn spans_overlap(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Wraps the chemical span in `<e1>…</e1>` and the protein span in
/// `<e2>…</e2>`. Spans are `[start, end)` in Unicode scalars and may appear
/// in either order.
pub fn insert_tags(text: &str, chem: (usize, usize), prot: (usize, usize)) -> Result<String, RelexError> {
    let chars: Vec<char> = text.chars().collect();
    for span in [chem, prot] {
        if span.0 > span.1 || span.1 > chars.len() {
            return Err(RelexError::SpanOutOfRange { span, len: chars.len() });
        }
    }
    if spans_overlap(chem, prot) {
        return Err(RelexError::Overlap { chem, prot });
    }
    let chem_first = (chem.0, chem.1) <= (prot.0, prot.1);
    let ((a, a_open, a_close), (b, b_open, b_close)) = if chem_first {
        ((chem, CHEM_OPEN, CHEM_CLOSE), (prot, PROT_OPEN, PROT_CLOSE))
    } else {
        ((prot, PROT_OPEN, PROT_CLOSE), (chem, CHEM_OPEN, CHEM_CLOSE))
    };
    let slice = |from: usize, to: usize| chars[from..to].iter().collect::<String>();
    let mut out = String::with_capacity(text.len() + 18);
    out.push_str(&slice(0, a.0));
    out.push_str(a_open);
    out.push_str(&slice(a.0, a.1));
    out.push_str(a_close);
    out.push_str(&slice(a.1, b.0));
    out.push_str(b_open);
    out.push_str(&slice(b.0, b.1));
    out.push_str(b_close);
    out.push_str(&slice(b.1, chars.len()));
    Ok(out)
}

pub fn strip_tags(tagged: &str) -> String {
    [CHEM_OPEN, CHEM_CLOSE, PROT_OPEN, PROT_CLOSE].iter().fold(tagged.to_string(), |s, tag| s.replace(tag, ""))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Expansion {
    pub instances: Vec<TaggedInstance>,
    /// Pairs dropped because their spans overlap or nest.
    pub skipped: usize,
}

/// One tagged copy of the sentence per (chemical, protein) mention pair,
/// ordered by chemical offset and then protein offset.
pub fn expand_pairs(sentence: &Sentence, mentions: &[&EntityMention]) -> Expansion {
    let by_offset = |etype: EntityType| {
        let mut ms: Vec<&EntityMention> = mentions.iter().copied().filter(|m| m.etype == etype).collect();
        ms.sort_by(|a, b| (a.start, a.end, &a.mention_id).cmp(&(b.start, b.end, &b.mention_id)));
        ms
    };
    let chems = by_offset(EntityType::Chemical);
    let prots = by_offset(EntityType::Protein);
    let mut out = Expansion::default();
    for chem in &chems {
        for prot in &prots {
            match insert_tags(&sentence.text, (chem.start, chem.end), (prot.start, prot.end)) {
                Ok(tagged_text) => out.instances.push(TaggedInstance {
                    key: InstanceKey {
                        doc_id: sentence.doc_id.clone(),
                        sent_index: sentence.sent_index,
                        chem_mention_id: chem.mention_id.clone(),
                        prot_mention_id: prot.mention_id.clone(),
                    },
                    tagged_text,
                }),
                Err(e) => {
                    log::warn!("{}#{}: skipping {} / {}: {e}", sentence.doc_id, sentence.sent_index, chem.mention_id, prot.mention_id);
                    out.skipped += 1;
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Classifiers
// ---------------------------------------------------------------------------

/// A binary relation model: tagged text in, score in `[0, 1]` out.
pub trait RelationClassifier: Send + Sync {
    fn name(&self) -> &'static str;
    fn score(&self, instance: &TaggedInstance) -> Result<f64, RelexError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Oracle,
    CueBaseline,
    External,
}

impl FromStr for ClassifierKind {
    type Err = RelexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(ClassifierKind::Oracle),
            "cue-baseline" => Ok(ClassifierKind::CueBaseline),
            "external" => Ok(ClassifierKind::External),
            other => Err(RelexError::ModelUnavailable(other.to_string())),
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Oracle => "oracle",
            ClassifierKind::CueBaseline => "cue-baseline",
            ClassifierKind::External => "external",
        })
    }
}

/// Replays gold labels. Pairs without a gold label are negative.
#[derive(Debug, Clone, Default)]
pub struct OracleClassifier {
    gold: HashMap<InstanceKey, BinaryLabel>,
}

impl OracleClassifier {
    pub fn new(labels: impl IntoIterator<Item = (InstanceKey, BinaryLabel)>) -> Self {
        let mut gold = HashMap::new();
        for (key, label) in labels {
            let slot = gold.entry(key).or_insert(label);
            if label.is_positive() {
                *slot = label;
            }
        }
        OracleClassifier { gold }
    }

    pub fn from_relations(relations: &[GoldRelation]) -> Self {
        Self::new(relations.iter().map(|r| (InstanceKey::from(r), binary_label(r.cpr))))
    }
}

impl RelationClassifier for OracleClassifier {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn score(&self, instance: &TaggedInstance) -> Result<f64, RelexError> {
        Ok(match self.gold.get(&instance.key) {
            Some(BinaryLabel::Positive) => 1.0,
            _ => 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CueBaseline;

impl RelationClassifier for CueBaseline {
    fn name(&self) -> &'static str {
        "cue-baseline"
    }

    fn score(&self, instance: &TaggedInstance) -> Result<f64, RelexError> {
        let text = strip_tags(&instance.tagged_text).to_lowercase();
        Ok(if CUE_STEMS.iter().any(|cue| text.contains(cue)) { 1.0 } else { 0.0 })
    }
}

/// Scores produced elsewhere, read from a sidecar file.
#[derive(Debug, Clone, Default)]
pub struct ExternalScores {
    scores: HashMap<InstanceKey, f64>,
}

impl ExternalScores {
    pub fn new(scores: HashMap<InstanceKey, f64>) -> Self {
        ExternalScores { scores }
    }

    pub fn load(path: &Path) -> Result<Self, RelexError> {
        Ok(ExternalScores { scores: read_scores_tsv(path)?.into_iter().collect() })
    }
}

impl RelationClassifier for ExternalScores {
    fn name(&self) -> &'static str {
        "external"
    }

    fn score(&self, instance: &TaggedInstance) -> Result<f64, RelexError> {
        self.scores.get(&instance.key).copied().ok_or_else(|| RelexError::MissingScore(instance.key.clone()))
    }
}

pub fn classify(instance: &TaggedInstance, model: &dyn RelationClassifier) -> Result<RelationPrediction, RelexError> {
    let score = model.score(instance)?;
    if !(0.0..=1.0).contains(&score) {
        return Err(RelexError::ScoreOutOfRange { key: instance.key.clone(), score });
    }
    Ok(RelationPrediction::from_score(instance.key.clone(), score))
}

pub fn classify_batch(
    instances: &[TaggedInstance],
    model: &dyn RelationClassifier,
    exec: Execution,
) -> Result<Vec<RelationPrediction>, RelexError> {
    map_slice(exec, instances, |inst| classify(inst, model)).into_iter().collect()
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalMetrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalMetrics {
    /// Ratios with a zero denominator are reported as 0.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        EvalMetrics { tp, fp, fn_, tn, precision, recall, f1 }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn evaluate(predicted: &[BinaryLabel], gold: &[BinaryLabel]) -> Result<EvalMetrics, RelexError> {
    if predicted.len() != gold.len() {
        return Err(RelexError::LengthMismatch { predictions: predicted.len(), gold: gold.len() });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, g) in predicted.iter().zip(gold) {
        match (p.is_positive(), g.is_positive()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(EvalMetrics::from_counts(tp, fp, fn_, tn))
}

/// Aligns predictions to gold labels by instance key. Every gold instance
/// needs a prediction; predictions without gold are ignored.
pub fn evaluate_keyed(
    predictions: &HashMap<InstanceKey, BinaryLabel>,
    gold: &[(InstanceKey, BinaryLabel)],
) -> Result<EvalMetrics, RelexError> {
    let predicted = gold
        .iter()
        .map(|(key, _)| predictions.get(key).copied().ok_or_else(|| RelexError::MissingScore(key.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<BinaryLabel> = gold.iter().map(|(_, l)| *l).collect();
    evaluate(&predicted, &labels)
}

// ---------------------------------------------------------------------------
// Sidecar files: doc_id \t sent_index \t chem_mention_id \t prot_mention_id \t score
// ---------------------------------------------------------------------------

pub fn parse_scores_tsv(text: &str, path: &Path) -> Result<Vec<(InstanceKey, f64)>, RelexError> {
    let malformed = |row: usize, detail: String| RelexError::MalformedRow { path: path.to_path_buf(), row, detail };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(malformed(row, format!("expected 5 columns, found {}", cols.len())));
        }
        let sent_index = cols[1].parse().map_err(|_| malformed(row, format!("bad sent_index {:?}", cols[1])))?;
        let score: f64 = cols[4].parse().map_err(|_| malformed(row, format!("bad score {:?}", cols[4])))?;
        let key = InstanceKey {
            doc_id: cols[0].into(),
            sent_index,
            chem_mention_id: cols[2].into(),
            prot_mention_id: cols[3].into(),
        };
        if !(0.0..=1.0).contains(&score) {
            return Err(malformed(row, format!("score {score} outside [0, 1]")));
        }
        rows.push((key, score));
    }
    Ok(rows)
}

pub fn read_scores_tsv(path: &Path) -> Result<Vec<(InstanceKey, f64)>, RelexError> {
    let text = fs::read_to_string(path).map_err(|source| RelexError::Io { path: path.to_path_buf(), source })?;
    parse_scores_tsv(&text, path)
}

/// Gold labels use the sidecar layout with a 0/1 score column.
pub fn read_gold_tsv(path: &Path) -> Result<Vec<(InstanceKey, BinaryLabel)>, RelexError> {
    Ok(read_scores_tsv(path)?
        .into_iter()
        .map(|(key, score)| {
            let label = if score >= DECISION_THRESHOLD { BinaryLabel::Positive } else { BinaryLabel::Negative };
            (key, label)
        })
        .collect())
}

pub fn write_scores_tsv(mut out: impl Write, predictions: &[RelationPrediction]) -> std::io::Result<()> {
    for p in predictions {
        writeln!(out, "{}\t{}\t{}\t{}\t{}", p.key.doc_id, p.key.sent_index, p.key.chem_mention_id, p.key.prot_mention_id, p.score)?;
    }
    Ok(())
}
