//! In-process inverted index over labeled events, with retrieval, label
//! scoring, composite scoring and per-chart bucketing.
//!
//! Every event is a document whose token set is its lowercased label words
//! plus their character trigrams. A query term resolves, in order, to an
//! exact index word, to synonym targets (words or whole slope families), or
//! to index words within trigram distance (typos). Retrieval keeps documents
//! matching at least one term and, when a term names a descriptor (the
//! noun/verb part of a label, as opposed to a modifier like "slowly"), only
//! documents carrying that descriptor.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::lexicon::{SynonymTable, SynonymTarget};
use crate::query_parser::DateRange;
use crate::trend_labeler::{EventKind, LabeledEvent};

/// Version of the serialized postings layout.
pub const POSTINGS_VERSION: u32 = 1;

/// Lowercased whitespace-separated words.
pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Token set of a text: its words plus each word's character trigrams.
/// Words shorter than three characters contribute only themselves.
pub fn encode(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for w in words(text) {
        let chars: Vec<char> = w.chars().collect();
        if chars.len() >= 3 {
            for t in chars.windows(3) {
                out.insert(t.iter().collect());
            }
        }
        out.insert(w);
    }
    out
}

/// Trigrams of a word padded with two leading blanks and one trailing blank,
/// so short words and word boundaries still produce comparable trigrams.
pub fn padded_trigrams(word: &str) -> BTreeSet<String> {
    let chars: Vec<char> = format!("  {} ", word.to_lowercase()).chars().collect();
    chars.windows(3).map(|t| t.iter().collect()).collect()
}

/// (shared, union) padded-trigram counts of two words.
pub fn trigram_overlap(a: &str, b: &str) -> (usize, usize) {
    let ta = padded_trigrams(a);
    let tb = padded_trigrams(b);
    let inter = ta.intersection(&tb).count();
    (inter, ta.len() + tb.len() - inter)
}

/// Whether the padded-trigram Jaccard similarity reaches `threshold`.
pub fn is_fuzzy_match(a: &str, b: &str, threshold: f64) -> bool {
    let (inter, union) = trigram_overlap(a, b);
    union > 0 && inter as f64 >= threshold * union as f64 - 1e-12
}

/// Characters of a label excluding whitespace.
pub fn label_length(label: &str) -> usize {
    label.chars().filter(|c| !c.is_whitespace()).count()
}

/// Number of query words present in the label divided by the square root of
/// the label's non-space character count.
pub fn label_score<S: AsRef<str>>(query_words: &[S], label: &str) -> f64 {
    let label_words: BTreeSet<String> = words(label).into_iter().collect();
    let unique: BTreeSet<String> = query_words.iter().map(|w| w.as_ref().to_lowercase()).collect();
    let matched = unique.iter().filter(|w| label_words.contains(*w)).count();
    matched as f64 / (label_length(label) as f64).sqrt()
}

/// Role of a label word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenPart {
    Descriptor,
    Modifier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: usize,
    pub event: LabeledEvent,
    pub words: BTreeSet<String>,
    pub tokens: BTreeSet<String>,
}

/// Serialized postings: token → ascending document ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Postings {
    pub version: u32,
    pub documents: usize,
    pub postings: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct Index {
    docs: Vec<Document>,
    postings: BTreeMap<String, Vec<usize>>,
    parts: BTreeMap<String, TokenPart>,
    label_docs: BTreeMap<String, Vec<usize>>,
    /// Peak angle per slope/compound label, for family selectors.
    label_modes: BTreeMap<String, f64>,
}

fn build_postings(docs: &[Document]) -> BTreeMap<String, Vec<usize>> {
    let mut postings: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for d in docs {
        for t in &d.tokens {
            postings.entry(t.clone()).or_default().push(d.id);
        }
    }
    postings
}

impl Index {
    /// Builds the index; document ids are positions in `events`.
    pub fn build(events: Vec<LabeledEvent>, label_modes: BTreeMap<String, f64>) -> Self {
        let docs: Vec<Document> = events
            .into_iter()
            .enumerate()
            .map(|(id, event)| Document {
                id,
                words: words(&event.label).into_iter().collect(),
                tokens: encode(&event.label),
                event,
            })
            .collect();
        let mut parts = BTreeMap::new();
        let mut label_docs: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for d in &docs {
            let ws = words(&d.event.label);
            for (i, w) in ws.iter().enumerate() {
                let part = if d.event.kind == EventKind::Compound && i == 0 && ws.len() > 1 {
                    TokenPart::Modifier
                } else {
                    TokenPart::Descriptor
                };
                let e = parts.entry(w.clone()).or_insert(part);
                if part == TokenPart::Descriptor {
                    *e = TokenPart::Descriptor;
                }
            }
            label_docs.entry(d.event.label.clone()).or_default().push(d.id);
        }
        let postings = build_postings(&docs);
        Index {
            docs,
            postings,
            parts,
            label_docs,
            label_modes,
        }
    }

    /// Builds the index with previously saved postings, which must equal the
    /// postings rebuilt from the events.
    pub fn with_postings(
        events: Vec<LabeledEvent>,
        label_modes: BTreeMap<String, f64>,
        saved: &Postings,
    ) -> Result<Self> {
        if saved.version != POSTINGS_VERSION {
            return Err(Error::Config(format!(
                "postings version {} is not supported (expected {POSTINGS_VERSION}); re-run `trendsearch index`",
                saved.version
            )));
        }
        let index = Index::build(events, label_modes);
        if saved.documents != index.docs.len() || saved.postings != index.postings {
            return Err(Error::Config(
                "postings do not match the events; re-run `trendsearch index`".into(),
            ));
        }
        Ok(index)
    }

    pub fn postings(&self) -> Postings {
        Postings {
            version: POSTINGS_VERSION,
            documents: self.docs.len(),
            postings: self.postings.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc(&self, id: usize) -> &Document {
        &self.docs[id]
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn part(&self, word: &str) -> Option<TokenPart> {
        self.parts.get(word).copied()
    }

    /// Every label word in the index.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.parts.keys().map(String::as_str)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.label_docs.keys().map(String::as_str)
    }

    pub fn label_modes(&self) -> &BTreeMap<String, f64> {
        &self.label_modes
    }

    /// Indexed labels whose angle mode falls in a slope family.
    pub fn family_labels(
        &self,
        family: crate::lexicon::Family,
        flat_threshold: f64,
    ) -> BTreeSet<String> {
        self.label_docs
            .keys()
            .filter(|l| {
                self.label_modes
                    .get(*l)
                    .is_some_and(|&m| family.selects(m, flat_threshold))
            })
            .cloned()
            .collect()
    }
}

/// Retrieval and ranking knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub fuzzy_threshold: f64,
    pub flat_threshold_deg: f64,
    pub retrieval_cap: usize,
    pub level: LevelPolicy,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions::from(&Config::default())
    }
}

impl From<&Config> for SearchOptions {
    fn from(c: &Config) -> Self {
        SearchOptions {
            fuzzy_threshold: c.fuzzy_threshold,
            flat_threshold_deg: c.flat_threshold_deg,
            retrieval_cap: c.retrieval_cap,
            level: LevelPolicy::All,
        }
    }
}

/// Which tolerance levels take part in scoring.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LevelPolicy {
    /// Every level; overlapping events from different levels may all match.
    #[default]
    All,
    /// One level only (superlative events, which have no level, always pass).
    Only(f64),
}

impl LevelPolicy {
    pub fn admits(&self, level: Option<f64>) -> bool {
        match (self, level) {
            (LevelPolicy::All, _) | (_, None) => true,
            (LevelPolicy::Only(l), Some(x)) => (l - x).abs() < 1e-12,
        }
    }
}

/// How a query term was matched against the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Synonym,
    Fuzzy,
    None,
}

/// A query term mapped onto index words and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedTerm {
    pub raw: String,
    /// Label words that satisfy the term.
    pub words: BTreeSet<String>,
    /// Whole labels that satisfy the term (slope-family selectors).
    pub labels: BTreeSet<String>,
    pub kind: MatchKind,
    /// The term names a descriptor, so every result must satisfy it.
    pub descriptor: bool,
}

impl ResolvedTerm {
    pub fn exact(&self) -> bool {
        self.kind == MatchKind::Exact
    }

    pub fn matches(&self, doc: &Document) -> bool {
        self.labels.contains(&doc.event.label) || doc.words.iter().any(|w| self.words.contains(w))
    }
}

/// Resolves one query term: exact index word, then synonyms, then trigram
/// fuzzy matches. Multi-word terms resolve when all their words are indexed.
pub fn resolve_term(
    index: &Index,
    raw: &str,
    synonyms: &SynonymTable,
    opts: &SearchOptions,
) -> ResolvedTerm {
    let raw_lc = raw.to_lowercase();
    let mut term = ResolvedTerm {
        raw: raw_lc.clone(),
        words: BTreeSet::new(),
        labels: BTreeSet::new(),
        kind: MatchKind::None,
        descriptor: false,
    };
    let parts = words(&raw_lc);
    if !parts.is_empty() && parts.iter().all(|w| index.part(w).is_some()) {
        term.words = parts.into_iter().collect();
        term.kind = MatchKind::Exact;
    } else if let Some(targets) = synonyms.get(&raw_lc) {
        for t in targets {
            match t {
                SynonymTarget::Token(w) => {
                    if index.part(w).is_some() {
                        term.words.insert(w.clone());
                    }
                }
                SynonymTarget::Family(f) => {
                    term.labels
                        .extend(index.family_labels(*f, opts.flat_threshold_deg));
                }
            }
        }
        if !term.words.is_empty() || !term.labels.is_empty() {
            term.kind = MatchKind::Synonym;
        }
    }
    if term.kind == MatchKind::None && !raw_lc.contains(' ') {
        term.words = index
            .vocabulary()
            .filter(|w| is_fuzzy_match(&raw_lc, w, opts.fuzzy_threshold))
            .map(String::from)
            .collect();
        if !term.words.is_empty() {
            term.kind = MatchKind::Fuzzy;
        }
    }
    term.descriptor = !term.labels.is_empty()
        || term
            .words
            .iter()
            .any(|w| index.part(w) == Some(TokenPart::Descriptor));
    term
}

pub fn resolve_terms<S: AsRef<str>>(
    index: &Index,
    raw_terms: &[S],
    synonyms: &SynonymTable,
    opts: &SearchOptions,
) -> Vec<ResolvedTerm> {
    raw_terms
        .iter()
        .map(|t| resolve_term(index, t.as_ref(), synonyms, opts))
        .collect()
}

/// Attribute and date restrictions applied after matching.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Filters {
    pub attr: Option<String>,
    pub date_range: Option<DateRange>,
}

impl Filters {
    pub fn admits(&self, event: &LabeledEvent) -> bool {
        self.attr.as_ref().map_or(true, |a| &event.chart_id == a)
            && self
                .date_range
                .map_or(true, |r| r.intersects(event.start_date, event.end_date))
    }
}

/// A retrieved document with its match statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub doc: usize,
    /// Number of resolved terms the document satisfies.
    pub matched_terms: usize,
    /// |ŝ ∩ s_i| over the encoded query words.
    pub overlap: usize,
    pub label_score: f64,
}

fn query_tokens(terms: &[ResolvedTerm]) -> BTreeSet<String> {
    terms
        .iter()
        .flat_map(|t| t.words.iter().flat_map(|w| encode(w)))
        .collect()
}

fn score_doc(terms: &[ResolvedTerm], q_tokens: &BTreeSet<String>, doc: &Document) -> Option<Candidate> {
    let matched_terms = terms.iter().filter(|t| t.matches(doc)).count();
    if matched_terms == 0 {
        return None;
    }
    if terms.iter().any(|t| t.descriptor && !t.matches(doc)) {
        return None;
    }
    Some(Candidate {
        doc: doc.id,
        matched_terms,
        overlap: doc.tokens.intersection(q_tokens).count(),
        label_score: matched_terms as f64 / (label_length(&doc.event.label) as f64).sqrt(),
    })
}

fn rank_and_cap(index: &Index, mut out: Vec<Candidate>, cap: usize) -> Vec<Candidate> {
    out.sort_by(|a, b| {
        b.matched_terms
            .cmp(&a.matched_terms)
            .then(b.overlap.cmp(&a.overlap))
            .then(b.label_score.total_cmp(&a.label_score))
            .then(
                index.docs[b.doc]
                    .event
                    .saliency
                    .total_cmp(&index.docs[a.doc].event.saliency),
            )
            .then(a.doc.cmp(&b.doc))
    });
    out.truncate(cap);
    out
}

/// Documents matching the resolved terms and filters, best `cap` first.
pub fn retrieve(
    index: &Index,
    terms: &[ResolvedTerm],
    filters: &Filters,
    opts: &SearchOptions,
) -> Vec<Candidate> {
    let q_tokens = query_tokens(terms);
    let mut ids = BTreeSet::new();
    for t in terms {
        for w in &t.words {
            if let Some(p) = index.postings.get(w) {
                ids.extend(p.iter().copied());
            }
        }
        for l in &t.labels {
            if let Some(p) = index.label_docs.get(l) {
                ids.extend(p.iter().copied());
            }
        }
    }
    let out = ids
        .into_iter()
        .map(|id| &index.docs[id])
        .filter(|d| opts.level.admits(d.event.epsilon_level) && filters.admits(&d.event))
        .filter_map(|d| score_doc(terms, &q_tokens, d))
        .collect();
    rank_and_cap(index, out, opts.retrieval_cap)
}

/// Reference implementation of [`retrieve`]: a linear scan of every document.
pub fn retrieve_brute_force(
    index: &Index,
    terms: &[ResolvedTerm],
    filters: &Filters,
    opts: &SearchOptions,
) -> Vec<Candidate> {
    let q_tokens = query_tokens(terms);
    let out = index
        .docs
        .iter()
        .filter(|d| opts.level.admits(d.event.epsilon_level) && filters.admits(&d.event))
        .filter_map(|d| score_doc(terms, &q_tokens, d))
        .collect();
    rank_and_cap(index, out, opts.retrieval_cap)
}

/// Something that can be grouped into a chart bucket.
pub trait Scored {
    fn chart_id(&self) -> &str;
    fn composite(&self) -> f64;
    /// Secondary order inside a bucket for equal composites.
    fn tiebreak(&self) -> (NaiveDate, usize);
}

/// A scored document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredMatch {
    pub doc: usize,
    pub chart_id: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub label: String,
    pub kind: EventKind,
    pub matched_tokens: usize,
    pub label_score: f64,
    pub saliency: f64,
    pub composite: f64,
}

impl ScoredMatch {
    pub fn new(index: &Index, c: &Candidate) -> Self {
        let e = &index.docs[c.doc].event;
        ScoredMatch {
            doc: c.doc,
            chart_id: e.chart_id.clone(),
            start_date: e.start_date,
            end_date: e.end_date,
            label: e.label.clone(),
            kind: e.kind,
            matched_tokens: c.matched_terms,
            label_score: c.label_score,
            saliency: e.saliency,
            composite: c.label_score * e.saliency,
        }
    }
}

impl Scored for ScoredMatch {
    fn chart_id(&self) -> &str {
        &self.chart_id
    }
    fn composite(&self) -> f64 {
        self.composite
    }
    fn tiebreak(&self) -> (NaiveDate, usize) {
        (self.start_date, self.doc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket<T> {
    pub chart_id: String,
    pub events: Vec<T>,
    pub bucket_score: f64,
}

/// Groups items by chart. Items within a bucket are ordered by composite
/// (descending); buckets by summed composite (descending), then chart id.
pub fn bucket<T: Scored>(items: Vec<T>) -> Vec<Bucket<T>> {
    let mut groups: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for it in items {
        groups.entry(it.chart_id().to_string()).or_default().push(it);
    }
    let mut out: Vec<Bucket<T>> = groups
        .into_iter()
        .map(|(chart_id, mut events)| {
            events.sort_by(|a, b| {
                b.composite()
                    .total_cmp(&a.composite())
                    .then(a.tiebreak().cmp(&b.tiebreak()))
            });
            let bucket_score = events.iter().map(Scored::composite).sum();
            Bucket {
                chart_id,
                events,
                bucket_score,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.bucket_score
            .total_cmp(&a.bucket_score)
            .then(a.chart_id.cmp(&b.chart_id))
    });
    out
}

/// Composite-scores the candidates and buckets them by chart.
pub fn score_and_bucket(index: &Index, candidates: &[Candidate]) -> Vec<Bucket<ScoredMatch>> {
    bucket(candidates.iter().map(|c| ScoredMatch::new(index, c)).collect())
}
