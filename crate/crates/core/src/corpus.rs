//! Corpus ingestion: annotated JSON Lines corpora, ChemProt-style TSV
//! datasets, the rule-based sentence splitter and CPR label handling.
//!
//! All offsets are Unicode scalar positions. Document-level offsets index the
//! body; mention offsets index the text of their sentence.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel::{map_slice, Execution};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {detail}")]
    Schema { line: usize, detail: String },
    #[error("line {line}: dangling reference: {detail}")]
    Dangling { line: usize, detail: String },
    #[error("missing {role} file in {dir}")]
    MissingFile { role: &'static str, dir: PathBuf },
    #[error("{file} row {row}: {detail}")]
    MalformedRow { file: String, row: usize, detail: String },
    #[error("{file} row {row}: dangling reference: {detail}")]
    DanglingRow { file: String, row: usize, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityType {
    Chemical,
    Protein,
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityType::Chemical => f.write_str("Chemical"),
            EntityType::Protein => f.write_str("Protein"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub doc_id: String,
    pub sent_index: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub mention_id: String,
    pub doc_id: String,
    pub sent_index: usize,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub etype: EntityType,
    #[serde(default)]
    pub external_ids: BTreeSet<String>,
}

/// ChemProt chemical–protein relation group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CprLabel {
    Cpr0,
    Cpr1,
    Cpr2,
    Cpr3,
    Cpr4,
    Cpr5,
    Cpr6,
    Cpr7,
    Cpr8,
    Cpr9,
    Cpr10,
    Other,
}

impl CprLabel {
    pub const ALL: [CprLabel; 12] = [
        CprLabel::Cpr0,
        CprLabel::Cpr1,
        CprLabel::Cpr2,
        CprLabel::Cpr3,
        CprLabel::Cpr4,
        CprLabel::Cpr5,
        CprLabel::Cpr6,
        CprLabel::Cpr7,
        CprLabel::Cpr8,
        CprLabel::Cpr9,
        CprLabel::Cpr10,
        CprLabel::Other,
    ];

    /// Group number for `CPR:n` labels, `None` for `Other`.
    pub fn group(self) -> Option<u8> {
        CprLabel::ALL[..11].iter().position(|&l| l == self).map(|n| n as u8)
    }
}

impl fmt::Display for CprLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.group() {
            Some(n) => write!(f, "CPR:{n}"),
            None => f.write_str("Other"),
        }
    }
}

impl FromStr for CprLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("other") {
            return Ok(CprLabel::Other);
        }
        let n = s
            .strip_prefix("CPR:")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n <= 10)
            .ok_or_else(|| format!("unknown CPR group {s:?}"))?;
        Ok(CprLabel::ALL[n])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    Positive,
    Negative,
}

impl BinaryLabel {
    pub fn is_positive(self) -> bool {
        self == BinaryLabel::Positive
    }
}

/// CPR:0 through CPR:9 state a relation; CPR:10 ("not relation") and `Other`
/// do not.
pub fn binary_label(cpr: CprLabel) -> BinaryLabel {
    match cpr {
        CprLabel::Cpr10 | CprLabel::Other => BinaryLabel::Negative,
        _ => BinaryLabel::Positive,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldRelation {
    pub doc_id: String,
    pub sent_index: usize,
    pub chem_mention_id: String,
    pub prot_mention_id: String,
    pub cpr: CprLabel,
}

// ---------------------------------------------------------------------------
// Sentence splitting
// ---------------------------------------------------------------------------

const ABBREVIATIONS: &[&str] = &["e.g.", "i.e.", "fig.", "vs.", "approx."];
const LEADING_PUNCT: &[char] = &['(', '[', '{', '"', '\'', '“', '‘'];

/// Splits `body` into sentences.
///
/// A boundary follows `.`, `!` or `?` when the next character is whitespace
/// and the next non-whitespace character is an uppercase letter or a digit. A
/// period does not end a sentence when its token is one of the known
/// abbreviations (`e.g.`, `i.e.`, `et al.`, `Fig.`, `vs.`, `approx.`) or a
/// lone uppercase initial such as `J.`. An initial directly after a numeric
/// token is read as a unit symbol (`37.5 C.`) and does end the sentence.
/// Decimal points never qualify because a digit, not whitespace, follows them.
///
/// Sentences carry no leading or trailing whitespace; the whitespace runs
/// between them are the only characters not covered.
pub fn split_sentences(doc_id: &str, body: &str) -> Vec<Sentence> {
    let chars: Vec<char> = body.chars().collect();
    sentence_spans(&chars)
        .into_iter()
        .enumerate()
        .map(|(sent_index, (start, end))| Sentence {
            doc_id: doc_id.to_string(),
            sent_index,
            start,
            end,
            text: chars[start..end].iter().collect(),
        })
        .collect()
}

fn sentence_spans(chars: &[char]) -> Vec<(usize, usize)> {
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start = match chars.iter().position(|c| !c.is_whitespace()) {
        Some(s) => s,
        None => return spans,
    };
    let mut i = start;
    while i < n {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') && i + 1 < n && chars[i + 1].is_whitespace() {
            let next = (i + 1..n).find(|&j| !chars[j].is_whitespace());
            if let Some(j) = next {
                let opens = chars[j].is_uppercase() || chars[j].is_ascii_digit();
                if opens && !(c == '.' && period_is_not_terminal(chars, start, i)) {
                    spans.push((start, i + 1));
                    start = j;
                    i = j;
                    continue;
                }
            }
        }
        i += 1;
    }
    let end = (start..n).rev().find(|&k| !chars[k].is_whitespace()).map_or(start, |k| k + 1);
    if end > start {
        spans.push((start, end));
    }
    spans
}

/// Token ending at `period` (inclusive) and the token before it, both bounded
/// by `floor`.
fn tokens_before(chars: &[char], floor: usize, period: usize) -> (String, Option<String>) {
    let tok_start = (floor..period).rev().find(|&k| chars[k].is_whitespace()).map_or(floor, |k| k + 1);
    let token: String = chars[tok_start..=period].iter().collect();
    let prev_end = (floor..tok_start).rev().find(|&k| !chars[k].is_whitespace()).map(|k| k + 1);
    let prev = prev_end.map(|pe| {
        let ps = (floor..pe).rev().find(|&k| chars[k].is_whitespace()).map_or(floor, |k| k + 1);
        chars[ps..pe].iter().collect()
    });
    (token, prev)
}

fn period_is_not_terminal(chars: &[char], floor: usize, period: usize) -> bool {
    if period > 0 && chars[period - 1].is_ascii_digit() && chars.get(period + 1).is_some_and(|c| c.is_ascii_digit()) {
        return true;
    }
    let (token, prev) = tokens_before(chars, floor, period);
    let token = token.trim_start_matches(LEADING_PUNCT);
    let lower = token.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    if lower == "al." && prev.as_deref().is_some_and(|p| p.trim_start_matches(LEADING_PUNCT).eq_ignore_ascii_case("et")) {
        return true;
    }
    let raw: Vec<char> = token.chars().collect();
    if raw.len() == 2 && raw[0].is_uppercase() {
        let after_number = prev.as_deref().is_some_and(is_numeric_token);
        return !after_number;
    }
    false
}

fn is_numeric_token(tok: &str) -> bool {
    tok.chars().any(|c| c.is_ascii_digit()) && tok.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '-' | '±'))
}

// ---------------------------------------------------------------------------
// In-memory corpus
// ---------------------------------------------------------------------------

/// Documents, their derived sentences and the entity mentions found in them.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub sentences: Vec<Sentence>,
    pub mentions: Vec<EntityMention>,
    doc_pos: HashMap<String, usize>,
    sent_pos: HashMap<(String, usize), usize>,
    mention_pos: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, sentences: Vec<Sentence>, mentions: Vec<EntityMention>) -> Self {
        let doc_pos = documents.iter().enumerate().map(|(i, d)| (d.doc_id.clone(), i)).collect();
        let sent_pos = sentences.iter().enumerate().map(|(i, s)| ((s.doc_id.clone(), s.sent_index), i)).collect();
        let mention_pos = mentions.iter().enumerate().map(|(i, m)| (m.mention_id.clone(), i)).collect();
        Corpus { documents, sentences, mentions, doc_pos, sent_pos, mention_pos }
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.doc_pos.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn sentence(&self, doc_id: &str, sent_index: usize) -> Option<&Sentence> {
        self.sent_pos.get(&(doc_id.to_string(), sent_index)).map(|&i| &self.sentences[i])
    }

    pub fn mention(&self, mention_id: &str) -> Option<&EntityMention> {
        self.mention_pos.get(mention_id).map(|&i| &self.mentions[i])
    }

    /// Mentions grouped per sentence, in sentence order. Sentences without
    /// mentions are omitted.
    pub fn mentions_by_sentence(&self) -> Vec<(&Sentence, Vec<&EntityMention>)> {
        let mut groups: HashMap<(&str, usize), Vec<&EntityMention>> = HashMap::new();
        for m in &self.mentions {
            groups.entry((m.doc_id.as_str(), m.sent_index)).or_default().push(m);
        }
        self.sentences
            .iter()
            .filter_map(|s| groups.remove(&(s.doc_id.as_str(), s.sent_index)).map(|ms| (s, ms)))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Annotated JSON Lines corpus
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Doc {
        doc_id: String,
        title: String,
        body: String,
        #[serde(default)]
        source_url: Option<String>,
    },
    Mention {
        mention_id: String,
        doc_id: String,
        sent_index: usize,
        start: usize,
        end: usize,
        surface: String,
        etype: EntityType,
        #[serde(default)]
        external_ids: BTreeSet<String>,
    },
}

fn read_to_string(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

pub fn load_annotated_corpus(path: &Path, exec: Execution) -> Result<Corpus, CorpusError> {
    parse_annotated_corpus(&read_to_string(path)?, exec)
}

/// Parses annotated-corpus JSON Lines. Blank lines are ignored; line numbers
/// in errors are 1-based.
pub fn parse_annotated_corpus(text: &str, exec: Execution) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    let mut mentions = Vec::new();
    let mut seen_docs = HashSet::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(line).map_err(|e| CorpusError::Schema { line: lineno, detail: e.to_string() })?;
        match record {
            Record::Doc { doc_id, title, body, source_url } => {
                if doc_id.is_empty() {
                    return Err(CorpusError::Schema { line: lineno, detail: "empty doc_id".into() });
                }
                if body.trim().is_empty() {
                    return Err(CorpusError::Schema { line: lineno, detail: format!("document {doc_id} has an empty body") });
                }
                if !seen_docs.insert(doc_id.clone()) {
                    return Err(CorpusError::Schema { line: lineno, detail: format!("duplicate doc_id {doc_id}") });
                }
                documents.push(Document { doc_id, title, body, source_url });
            }
            Record::Mention { mention_id, doc_id, sent_index, start, end, surface, etype, external_ids } => {
                let m = EntityMention { mention_id, doc_id, sent_index, start, end, surface, etype, external_ids };
                mentions.push((lineno, m));
            }
        }
    }
    documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let sentences: Vec<Sentence> =
        map_slice(exec, &documents, |d| split_sentences(&d.doc_id, &d.body)).into_iter().flatten().collect();

    let partial = Corpus::new(documents, sentences, Vec::new());
    let mut seen_mentions = HashSet::new();
    for (lineno, m) in &mentions {
        if partial.document(&m.doc_id).is_none() {
            return Err(CorpusError::Dangling { line: *lineno, detail: format!("unknown doc_id {}", m.doc_id) });
        }
        let sentence = partial.sentence(&m.doc_id, m.sent_index).ok_or_else(|| CorpusError::Dangling {
            line: *lineno,
            detail: format!("document {} has no sentence {}", m.doc_id, m.sent_index),
        })?;
        check_mention_span(m, sentence).map_err(|detail| CorpusError::Schema { line: *lineno, detail })?;
        if !seen_mentions.insert(m.mention_id.clone()) {
            return Err(CorpusError::Schema { line: *lineno, detail: format!("duplicate mention_id {}", m.mention_id) });
        }
    }
    let mut mentions: Vec<EntityMention> = mentions.into_iter().map(|(_, m)| m).collect();
    mentions.sort_by(|a, b| (&a.doc_id, a.sent_index).cmp(&(&b.doc_id, b.sent_index)));
    let Corpus { documents, sentences, .. } = partial;
    Ok(Corpus::new(documents, sentences, mentions))
}

fn check_mention_span(m: &EntityMention, sentence: &Sentence) -> Result<(), String> {
    let len = sentence.text.chars().count();
    if m.start >= m.end || m.end > len {
        return Err(format!("mention {} span {}..{} outside sentence of length {len}", m.mention_id, m.start, m.end));
    }
    let slice: String = sentence.text.chars().skip(m.start).take(m.end - m.start).collect();
    if slice != m.surface {
        return Err(format!("mention {} surface {:?} does not match sentence text {:?}", m.mention_id, m.surface, slice));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ChemProt TSV
// ---------------------------------------------------------------------------

/// Counts reported alongside a ChemProt load.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadSummary {
    pub relations_in_file: usize,
    pub dropped_not_cosentential: usize,
    pub entities_spanning_sentences: usize,
}

#[derive(Debug, Clone)]
pub struct ChemProtCorpus {
    pub corpus: Corpus,
    pub relations: Vec<GoldRelation>,
    pub summary: LoadSummary,
}

fn find_role_file(dir: &Path, role: &'static str) -> Result<PathBuf, CorpusError> {
    let entries = fs::read_dir(dir).map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?;
    let suffix = format!("{role}.tsv");
    let mut found: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n == suffix || n.ends_with(&format!("_{suffix}"))))
        .collect();
    found.sort();
    found.into_iter().next().ok_or(CorpusError::MissingFile { role, dir: dir.to_path_buf() })
}

fn tsv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split('\t').map(str::trim).collect()))
}

struct RawEntity {
    row: usize,
    eid: String,
    etype: EntityType,
    start: usize,
    end: usize,
    surface: String,
}

/// Loads `*abstracts.tsv`, `*entities.tsv` and `*relations.tsv` from `dir`.
///
/// Entity offsets index the abstract text. Entities that straddle a sentence
/// boundary are dropped, and so is every relation whose two arguments do not
/// share a sentence; both are counted in the summary.
pub fn parse_chemprot(dir: &Path, exec: Execution) -> Result<ChemProtCorpus, CorpusError> {
    let abstracts_path = find_role_file(dir, "abstracts")?;
    let entities_path = find_role_file(dir, "entities")?;
    let relations_path = find_role_file(dir, "relations")?;
    let file_name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let (abstracts_name, entities_name, relations_name) =
        (file_name(&abstracts_path), file_name(&entities_path), file_name(&relations_path));

    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (row, cols) in tsv_rows(&read_to_string(&abstracts_path)?) {
        if cols.len() != 3 {
            return Err(malformed(&abstracts_name, row, format!("expected 3 columns, found {}", cols.len())));
        }
        if cols[0].is_empty() || cols[2].is_empty() {
            return Err(malformed(&abstracts_name, row, "empty pmid or abstract".into()));
        }
        if !seen.insert(cols[0].to_string()) {
            return Err(malformed(&abstracts_name, row, format!("duplicate pmid {}", cols[0])));
        }
        documents.push(Document { doc_id: cols[0].into(), title: cols[1].into(), body: cols[2].into(), source_url: None });
    }
    documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let lengths: HashMap<&str, usize> = documents.iter().map(|d| (d.doc_id.as_str(), d.body.chars().count())).collect();

    let entities_text = read_to_string(&entities_path)?;
    let mut raw: HashMap<String, Vec<RawEntity>> = HashMap::new();
    for (row, cols) in tsv_rows(&entities_text) {
        if cols.len() != 6 {
            return Err(malformed(&entities_name, row, format!("expected 6 columns, found {}", cols.len())));
        }
        let len = *lengths
            .get(cols[0])
            .ok_or_else(|| dangling(&entities_name, row, format!("unknown pmid {}", cols[0])))?;
        let etype = match cols[2] {
            "CHEMICAL" => EntityType::Chemical,
            "GENE-Y" | "GENE-N" => EntityType::Protein,
            other => return Err(malformed(&entities_name, row, format!("unknown entity type {other}"))),
        };
        let offset = |s: &str| s.parse::<usize>().map_err(|_| malformed(&entities_name, row, format!("bad offset {s:?}")));
        let (start, end) = (offset(cols[3])?, offset(cols[4])?);
        if start >= end || end > len {
            return Err(malformed(&entities_name, row, format!("span {start}..{end} outside abstract of length {len}")));
        }
        raw.entry(cols[0].to_string()).or_default().push(RawEntity {
            row,
            eid: cols[1].into(),
            etype,
            start,
            end,
            surface: cols[5].into(),
        });
    }

    let per_doc = map_slice(exec, &documents, |doc| {
        let sentences = split_sentences(&doc.doc_id, &doc.body);
        let chars: Vec<char> = doc.body.chars().collect();
        let mut mentions = Vec::new();
        let mut straddling = Vec::new();
        for e in raw.get(&doc.doc_id).map(Vec::as_slice).unwrap_or_default() {
            let text: String = chars[e.start..e.end].iter().collect();
            if text != e.surface {
                return Err(malformed(&entities_name, e.row, format!("text {:?} does not match abstract {:?}", e.surface, text)));
            }
            match sentences.iter().find(|s| s.start <= e.start && e.end <= s.end) {
                Some(s) => mentions.push(EntityMention {
                    mention_id: chemprot_mention_id(&doc.doc_id, &e.eid),
                    doc_id: doc.doc_id.clone(),
                    sent_index: s.sent_index,
                    start: e.start - s.start,
                    end: e.end - s.start,
                    surface: e.surface.clone(),
                    etype: e.etype,
                    external_ids: BTreeSet::new(),
                }),
                None => straddling.push(chemprot_mention_id(&doc.doc_id, &e.eid)),
            }
        }
        Ok((sentences, mentions, straddling))
    });

    let mut sentences = Vec::new();
    let mut mentions = Vec::new();
    let mut straddling = HashSet::new();
    for part in per_doc {
        let (s, m, x) = part?;
        sentences.extend(s);
        mentions.extend(m);
        straddling.extend(x);
    }
    let mut summary = LoadSummary { entities_spanning_sentences: straddling.len(), ..LoadSummary::default() };
    let corpus = Corpus::new(documents, sentences, mentions);

    let mut relations = Vec::new();
    for (row, cols) in tsv_rows(&read_to_string(&relations_path)?) {
        if cols.len() != 6 {
            return Err(malformed(&relations_name, row, format!("expected 6 columns, found {}", cols.len())));
        }
        summary.relations_in_file += 1;
        let pmid = cols[0];
        if corpus.document(pmid).is_none() {
            return Err(dangling(&relations_name, row, format!("unknown pmid {pmid}")));
        }
        let cpr: CprLabel = cols[1].parse().map_err(|e| malformed(&relations_name, row, e))?;
        let arg = |col: &str, prefix: &str| {
            col.strip_prefix(prefix)
                .map(|eid| chemprot_mention_id(pmid, eid))
                .ok_or_else(|| malformed(&relations_name, row, format!("expected {prefix}<entity id>, found {col:?}")))
        };
        let (chem_id, prot_id) = (arg(cols[4], "Arg1:")?, arg(cols[5], "Arg2:")?);
        if straddling.contains(&chem_id) || straddling.contains(&prot_id) {
            summary.dropped_not_cosentential += 1;
            continue;
        }
        let chem = corpus
            .mention(&chem_id)
            .ok_or_else(|| dangling(&relations_name, row, format!("unknown entity {}", cols[4])))?;
        let prot = corpus
            .mention(&prot_id)
            .ok_or_else(|| dangling(&relations_name, row, format!("unknown entity {}", cols[5])))?;
        if chem.etype != EntityType::Chemical || prot.etype != EntityType::Protein {
            return Err(malformed(&relations_name, row, "Arg1 must be a chemical and Arg2 a gene/protein".into()));
        }
        if chem.sent_index != prot.sent_index {
            summary.dropped_not_cosentential += 1;
            continue;
        }
        relations.push(GoldRelation {
            doc_id: pmid.to_string(),
            sent_index: chem.sent_index,
            chem_mention_id: chem_id,
            prot_mention_id: prot_id,
            cpr,
        });
    }
    if summary.dropped_not_cosentential > 0 {
        log::info!("dropped {} relations whose arguments are not in one sentence", summary.dropped_not_cosentential);
    }
    Ok(ChemProtCorpus { corpus, relations, summary })
}

pub fn chemprot_mention_id(pmid: &str, entity_id: &str) -> String {
    format!("{pmid}:{entity_id}")
}

fn malformed(file: &str, row: usize, detail: String) -> CorpusError {
    CorpusError::MalformedRow { file: file.to_string(), row, detail }
}

fn dangling(file: &str, row: usize, detail: String) -> CorpusError {
    CorpusError::DanglingRow { file: file.to_string(), row, detail }
}

/// Keeps the first of each group of relations that agree on sentence, both
/// argument surfaces and spans, and CPR group.
pub fn dedup_relations(relations: &[GoldRelation], corpus: &Corpus) -> Vec<GoldRelation> {
    let span_key = |id: &str| match corpus.mention(id) {
        Some(m) => (m.surface.clone(), m.start, m.end),
        None => (id.to_string(), usize::MAX, usize::MAX),
    };
    let mut seen = HashSet::new();
    relations
        .iter()
        .filter(|r| {
            let key = (r.doc_id.clone(), r.sent_index, span_key(&r.chem_mention_id), span_key(&r.prot_mention_id), r.cpr);
            seen.insert(key)
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(body: &str) -> Vec<String> {
        split_sentences("d", body).into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn splits_on_terminators() {
        assert_eq!(texts("Hello world."), vec!["Hello world."]);
        assert_eq!(texts("Hello world. Second one."), vec!["Hello world.", "Second one."]);
        assert_eq!(texts("Tested at 37.5 C. Results follow."), vec!["Tested at 37.5 C.", "Results follow."]);
        assert!(texts("").is_empty());
        assert!(texts("   \n ").is_empty());
    }

    #[test]
    fn respects_abbreviations_and_initials() {
        assert_eq!(texts("As shown by Smith et al. 2020 it works."), vec!["As shown by Smith et al. 2020 it works."]);
        assert_eq!(texts("See Fig. 2 for details. Done!"), vec!["See Fig. 2 for details.", "Done!"]);
        assert_eq!(texts("The study by J. Smith is here. Next."), vec!["The study by J. Smith is here.", "Next."]);
        assert_eq!(texts("Drugs (e.g. Remdesivir) work. Really? Yes."), vec!["Drugs (e.g. Remdesivir) work.", "Really?", "Yes."]);
        assert_eq!(texts("It was approx. 3-fold vs. Placebo."), vec!["It was approx. 3-fold vs. Placebo."]);
        assert_eq!(texts("ends here. lowercase continues"), vec!["ends here. lowercase continues"]);
    }

    #[test]
    fn offsets_are_scalar_positions() {
        let body = "  Dosis 5 µM. Zweiter Satz";
        let s = split_sentences("d", body);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].start, s[0].end), (2, 13));
        assert_eq!(s[1].text, "Zweiter Satz");
        let chars: Vec<char> = body.chars().collect();
        for x in &s {
            assert_eq!(chars[x.start..x.end].iter().collect::<String>(), x.text);
        }
    }

    proptest! {
        #[test]
        fn splitter_round_trip(body in "[A-Za-z0-9 .!?\n]{0,80}") {
            let sents = split_sentences("d", &body);
            let chars: Vec<char> = body.chars().collect();
            let mut rebuilt = String::new();
            let mut pos = 0;
            for (i, s) in sents.iter().enumerate() {
                prop_assert_eq!(s.sent_index, i);
                prop_assert!(s.start < s.end && s.end <= chars.len());
                let gap: String = chars[pos..s.start].iter().collect();
                prop_assert!(gap.chars().all(char::is_whitespace));
                rebuilt.push_str(&gap);
                rebuilt.push_str(&s.text);
                pos = s.end;
            }
            let tail: String = chars[pos..].iter().collect();
            prop_assert!(tail.chars().all(char::is_whitespace));
            rebuilt.push_str(&tail);
            prop_assert_eq!(rebuilt, body);
        }
    }

    #[test]
    fn binary_mapping_is_exhaustive() {
        for label in CprLabel::ALL {
            let expected = match label.group() {
                Some(n) if n <= 9 => BinaryLabel::Positive,
                _ => BinaryLabel::Negative,
            };
            assert_eq!(binary_label(label), expected, "{label}");
        }
        assert_eq!(binary_label(CprLabel::Cpr4), BinaryLabel::Positive);
        assert_eq!(binary_label(CprLabel::Cpr10), BinaryLabel::Negative);
        assert_eq!(binary_label(CprLabel::Other), BinaryLabel::Negative);
    }

    #[test]
    fn cpr_parse_round_trip() {
        for label in CprLabel::ALL {
            assert_eq!(label.to_string().parse::<CprLabel>().unwrap(), label);
        }
        assert!("CPR:11".parse::<CprLabel>().is_err());
        assert!("CPR4".parse::<CprLabel>().is_err());
    }

    fn mini_corpus() -> Corpus {
        let body = "Aspirin inhibits COX-1. Aspirin inhibits COX-1 too.";
        let sentences = split_sentences("1", body);
        let m = |id: &str, s: usize, start: usize, end: usize, surface: &str, etype| EntityMention {
            mention_id: id.into(),
            doc_id: "1".into(),
            sent_index: s,
            start,
            end,
            surface: surface.into(),
            etype,
            external_ids: BTreeSet::new(),
        };
        let mentions = vec![
            m("a", 0, 0, 7, "Aspirin", EntityType::Chemical),
            m("a2", 0, 0, 7, "Aspirin", EntityType::Chemical),
            m("c", 0, 17, 22, "COX-1", EntityType::Protein),
            m("b", 1, 0, 7, "Aspirin", EntityType::Chemical),
            m("d", 1, 17, 22, "COX-1", EntityType::Protein),
        ];
        let doc = Document { doc_id: "1".into(), title: String::new(), body: body.into(), source_url: None };
        Corpus::new(vec![doc], sentences, mentions)
    }

    fn rel(s: usize, chem: &str, prot: &str, cpr: CprLabel) -> GoldRelation {
        GoldRelation { doc_id: "1".into(), sent_index: s, chem_mention_id: chem.into(), prot_mention_id: prot.into(), cpr }
    }

    #[test]
    fn dedup_examples() {
        let corpus = mini_corpus();
        let identical = vec![rel(0, "a", "c", CprLabel::Cpr4), rel(0, "a2", "c", CprLabel::Cpr4)];
        assert_eq!(dedup_relations(&identical, &corpus).len(), 1);
        assert_eq!(dedup_relations(&identical, &corpus)[0].chem_mention_id, "a");

        let two_sentences = vec![rel(0, "a", "c", CprLabel::Cpr4), rel(1, "b", "d", CprLabel::Cpr4)];
        assert_eq!(dedup_relations(&two_sentences, &corpus).len(), 2);

        let two_labels = vec![rel(0, "a", "c", CprLabel::Cpr4), rel(0, "a", "c", CprLabel::Cpr3)];
        assert_eq!(dedup_relations(&two_labels, &corpus).len(), 2);
    }

    proptest! {
        #[test]
        fn dedup_is_idempotent(picks in proptest::collection::vec((0usize..2, 0usize..2, 0usize..3), 0..20)) {
            let corpus = mini_corpus();
            let chems = [["a", "a2"], ["b", "b"]];
            let prots = ["c", "d"];
            let cprs = [CprLabel::Cpr3, CprLabel::Cpr4, CprLabel::Other];
            let rels: Vec<_> = picks.iter().map(|&(s, c, l)| rel(s, chems[s][c], prots[s], cprs[l])).collect();
            let once = dedup_relations(&rels, &corpus);
            prop_assert_eq!(dedup_relations(&once, &corpus), once);
        }
    }

    #[test]
    fn empty_annotated_corpus() {
        let c = parse_annotated_corpus("", Execution::Sequential).unwrap();
        assert!(c.documents.is_empty() && c.mentions.is_empty());
    }

    #[test]
    fn annotated_corpus_rejects_bad_records() {
        let doc = r#"{"kind":"doc","doc_id":"d1","title":"t","body":"Aspirin helps."}"#;
        let unknown = r#"{"kind":"mention","mention_id":"m","doc_id":"nope","sent_index":0,"start":0,"end":7,"surface":"Aspirin","etype":"Chemical","external_ids":[]}"#;
        let err = parse_annotated_corpus(&format!("{doc}\n{unknown}\n"), Execution::Sequential).unwrap_err();
        assert!(matches!(err, CorpusError::Dangling { line: 2, .. }), "{err}");

        let bad_surface = unknown.replace("nope", "d1").replace("Aspirin\"", "Asp\"");
        let err = parse_annotated_corpus(&format!("{doc}\n{bad_surface}"), Execution::Sequential).unwrap_err();
        assert!(matches!(err, CorpusError::Schema { line: 2, .. }), "{err}");

        let err = parse_annotated_corpus("{\"kind\":\"doc\"}", Execution::Sequential).unwrap_err();
        assert!(matches!(err, CorpusError::Schema { line: 1, .. }));

        let err = parse_annotated_corpus(&format!("{doc}\n{doc}"), Execution::Sequential).unwrap_err();
        assert!(matches!(err, CorpusError::Schema { line: 2, .. }));
    }
}
