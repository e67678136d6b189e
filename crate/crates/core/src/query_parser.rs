//! Rule-based parser from a free-text trend query to a structured query.
//!
//! The parser fills four roles: the event type (single or sequence), the
//! trend terms of each sequence slot, an optional chart attribute resolved
//! through company names, aliases and tickers, and an optional date range.
//! Anything it cannot match exactly is reported in `inexact_terms` so the
//! caller can tell the user.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lexicon::{default_stop_phrases, default_synonyms, StopPhrases, SynonymTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventType {
    Single,
    Sequence,
}

/// Half-open date interval `[gte, lt)`; either side may be open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DateRange {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gte: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lt: Option<NaiveDate>,
}

impl DateRange {
    /// Intersection, or `None` when it is empty.
    pub fn intersect(&self, other: &DateRange) -> Option<DateRange> {
        let gte = match (self.gte, other.gte) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let lt = match (self.lt, other.lt) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let r = DateRange { gte, lt };
        r.is_valid().then_some(r)
    }

    pub fn is_valid(&self) -> bool {
        match (self.gte, self.lt) {
            (Some(g), Some(l)) => g < l,
            _ => true,
        }
    }

    /// Whether the half-open span `[start, end)` intersects the range. A
    /// zero-length span is treated as the single day `start`.
    pub fn intersects(&self, start: NaiveDate, end: NaiveDate) -> bool {
        let end = if end > start { end } else { start.succ_opt().unwrap_or(start) };
        self.lt.map_or(true, |lt| start < lt) && self.gte.map_or(true, |gte| end > gte)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedQuery {
    pub event_type: EventType,
    /// One term list per sequence slot.
    pub trend_terms: Vec<Vec<String>>,
    /// Resolved ticker.
    pub attr: Option<String>,
    /// The attribute as written in the query (lowercase).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attr_mention: Option<String>,
    pub date_range: Option<DateRange>,
    pub inexact_terms: Vec<String>,
}

impl ParsedQuery {
    /// The structured form in its display layout: single queries list their
    /// terms flat, and the attribute is shown as written.
    pub fn to_display_json(&self) -> Value {
        let terms = match self.event_type {
            EventType::Single => json!(self.trend_terms.iter().flatten().collect::<Vec<_>>()),
            EventType::Sequence => json!(self.trend_terms),
        };
        let mut v = json!({ "event_type": self.event_type, "trend_terms": terms });
        if let Some(a) = self.attr_mention.as_ref().or(self.attr.as_ref()) {
            v["attr"] = json!(a);
        }
        if let Some(r) = &self.date_range {
            v["date_range"] = serde_json::to_value(r).expect("dates serialize");
        }
        v
    }
}

/// A chart's name and aliases for attribute matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanyInfo {
    pub ticker: String,
    pub company: String,
    pub aliases: Vec<String>,
}

/// What the parser did with a span of the query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Stop,
    Separator,
    Trend,
    Attr,
    Date,
    Inexact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRole {
    /// The (lowercased) query words covered.
    pub text: String,
    pub role: Role,
}

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

fn month_number(word: &str) -> Option<u32> {
    if let Some(i) = MONTHS.iter().position(|m| *m == word) {
        return Some(i as u32 + 1);
    }
    match word {
        "jan" => Some(1),
        "feb" => Some(2),
        "mar" => Some(3),
        "apr" => Some(4),
        "jun" => Some(6),
        "jul" => Some(7),
        "aug" => Some(8),
        "sep" | "sept" => Some(9),
        "oct" => Some(10),
        "nov" => Some(11),
        "dec" => Some(12),
        _ => None,
    }
}

fn year_number(word: &str) -> Option<i32> {
    if word.len() == 4 && word.bytes().all(|b| b.is_ascii_digit()) {
        let y: i32 = word.parse().ok()?;
        (1900..=2100).contains(&y).then_some(y)
    } else {
        None
    }
}

fn first_of(year: i32, month: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, month, 1).expect("valid month")
}

fn next_month(d: NaiveDate) -> NaiveDate {
    if d.month() == 12 {
        first_of(d.year() + 1, 1)
    } else {
        first_of(d.year(), d.month() + 1)
    }
}

const PREPOSITIONS: [&str; 6] = ["before", "after", "since", "in", "during", "until"];
const RELATIVE: [&str; 8] = [
    "recently", "recent", "lately", "today", "yesterday", "currently", "now", "ytd",
];
const RELATIVE_UNITS: [&str; 6] = ["year", "month", "week", "quarter", "decade", "days"];

/// `(Month)? Year` at the start of `words`: (consumed words, month, year).
fn month_year(words: &[&str]) -> Option<(usize, Option<u32>, i32)> {
    if let Some(y) = words.first().and_then(|w| year_number(w)) {
        return Some((1, None, y));
    }
    let m = month_number(words.first()?)?;
    let y = year_number(words.get(1)?)?;
    Some((2, Some(m), y))
}

fn range_for(prep: &str, month: Option<u32>, year: i32) -> DateRange {
    let start = first_of(year, month.unwrap_or(1));
    let end = match month {
        Some(_) => next_month(start),
        None => first_of(year + 1, 1),
    };
    match prep {
        "before" | "until" => DateRange {
            gte: None,
            lt: Some(start),
        },
        "after" | "since" => DateRange {
            gte: Some(end),
            lt: None,
        },
        _ => DateRange {
            gte: Some(start),
            lt: Some(end),
        },
    }
}

enum DateMatch {
    Range(usize, DateRange),
    /// A temporal phrase the grammar does not support.
    Unsupported(usize),
}

fn date_at(words: &[&str]) -> Option<DateMatch> {
    let first = *words.first()?;
    if PREPOSITIONS.contains(&first) {
        if let Some((n, m, y)) = month_year(&words[1..]) {
            return Some(DateMatch::Range(n + 1, range_for(first, m, y)));
        }
        if let Some(n) = relative_at(&words[1..]) {
            return Some(DateMatch::Unsupported(n + 1));
        }
        return match first {
            "in" => None,
            _ => Some(DateMatch::Unsupported(1)),
        };
    }
    if let Some((n, m, y)) = month_year(words) {
        return Some(DateMatch::Range(n, range_for("in", m, y)));
    }
    relative_at(words).map(DateMatch::Unsupported)
}

fn relative_at(words: &[&str]) -> Option<usize> {
    let first = *words.first()?;
    if RELATIVE.contains(&first) {
        return Some(1);
    }
    if ["last", "this", "past", "next"].contains(&first) {
        if let Some(unit) = words.get(1) {
            if RELATIVE_UNITS.contains(unit) || RELATIVE_UNITS.contains(&unit.trim_end_matches('s')) {
                return Some(2);
            }
        }
    }
    None
}

/// Parses a stand-alone date phrase such as `"before November 2016"` or
/// `"in 2014"`. Returns `None` for anything outside the supported grammar.
pub fn parse_date_range(phrase: &str) -> Option<DateRange> {
    let lower = phrase.to_lowercase();
    let words: Vec<&str> = lower.split_whitespace().collect();
    match date_at(&words)? {
        DateMatch::Range(n, r) if n == words.len() => Some(r),
        _ => None,
    }
}

/// Multi-word verb phrases with a fixed meaning.
const PHRASES: [(&str, &str); 24] = [
    ("went up", "up"),
    ("go up", "up"),
    ("goes up", "up"),
    ("going up", "up"),
    ("gone up", "up"),
    ("move up", "up"),
    ("moved up", "up"),
    ("moving up", "up"),
    ("shot up", "up"),
    ("trending up", "up"),
    ("trended up", "up"),
    ("jumped up", "up"),
    ("went down", "down"),
    ("go down", "down"),
    ("goes down", "down"),
    ("going down", "down"),
    ("gone down", "down"),
    ("move down", "down"),
    ("moved down", "down"),
    ("moving down", "down"),
    ("trending down", "down"),
    ("trended down", "down"),
    ("leveled off", "leveling"),
    ("levelled off", "leveling"),
];

/// Irregular verb forms and their gerunds.
const IRREGULAR: [(&str, &str); 16] = [
    ("fell", "falling"),
    ("fallen", "falling"),
    ("rose", "rising"),
    ("risen", "rising"),
    ("grew", "growing"),
    ("grown", "growing"),
    ("sank", "sinking"),
    ("sunk", "sinking"),
    ("shrank", "shrinking"),
    ("shrunk", "shrinking"),
    ("dove", "diving"),
    ("slid", "sliding"),
    ("shot", "shooting"),
    ("lost", "losing"),
    ("spiked", "spike"),
    ("peaked", "peak"),
];

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// Gerund candidates for a base verb form.
fn gerunds(base: &str, out: &mut Vec<String>) {
    let b = base.as_bytes();
    if b.len() < 2 {
        return;
    }
    if base.ends_with('e') && !base.ends_with("ee") {
        out.push(format!("{}ing", &base[..base.len() - 1]));
    }
    out.push(format!("{base}ing"));
    let n = b.len();
    if n >= 3 && !is_vowel(b[n - 1]) && is_vowel(b[n - 2]) && !is_vowel(b[n - 3])
        && !matches!(b[n - 1], b'w' | b'x' | b'y')
    {
        out.push(format!("{base}{}ing", b[n - 1] as char));
    }
}

/// Candidate lemmas for a word, most specific first: irregular forms, then
/// the suffix rules (`-ied`, `-ed`, `-es`, `-s`, bare stem).
pub fn lemma_candidates(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    if let Some((_, g)) = IRREGULAR.iter().find(|(w, _)| *w == word) {
        out.push(g.to_string());
    }
    if word.ends_with("ing") {
        return out;
    }
    if let Some(stem) = word.strip_suffix("ied") {
        out.push(format!("{stem}ying"));
        out.push(format!("{stem}y"));
    } else if let Some(stem) = word.strip_suffix("ed") {
        out.push(format!("{stem}ing"));
        let s = stem.as_bytes();
        if s.len() >= 2 && s[s.len() - 1] == s[s.len() - 2] {
            out.push(format!("{}ing", &stem[..stem.len() - 1]));
        }
        // "declined" → "decline", "plateaued" → "plateau".
        out.push(word[..word.len() - 1].to_string());
        out.push(stem.to_string());
        gerunds(&word[..word.len() - 1], &mut out);
    } else {
        if let Some(stem) = word.strip_suffix("es") {
            gerunds(stem, &mut out);
            out.push(stem.to_string());
        }
        if let Some(stem) = word.strip_suffix('s').filter(|s| !s.ends_with('s')) {
            gerunds(stem, &mut out);
            out.push(stem.to_string());
        }
        gerunds(word, &mut out);
    }
    let mut seen = BTreeSet::new();
    out.retain(|c| c != word && seen.insert(c.clone()));
    out
}

/// Gerund form used when nothing matches the vocabulary or synonyms.
fn fallback_lemma(word: &str) -> String {
    if let Some((_, g)) = IRREGULAR.iter().find(|(w, _)| *w == word) {
        return g.to_string();
    }
    match word.strip_suffix("ed") {
        Some(stem) if stem.len() >= 2 && !word.ends_with("eed") => format!("{stem}ing"),
        _ => word.to_string(),
    }
}

#[derive(Debug)]
enum Item {
    Stop(String),
    Comma,
    Then,
    Trend { text: String, term: String, exact: bool },
    Attr { text: String, ticker: String },
    Date { text: String, range: DateRange },
    Inexact(String),
}

/// The parser with its vocabulary, attribute catalog and word lists.
/// Immutable after construction and safe to share.
#[derive(Debug, Clone)]
pub struct QueryParser {
    vocabulary: BTreeSet<String>,
    synonyms: SynonymTable,
    stops: StopPhrases,
    /// Lowercase alias phrase (as words) → ticker, longest first.
    aliases: Vec<(Vec<String>, String)>,
    tickers: BTreeMap<String, String>,
}

impl QueryParser {
    pub fn new<I, S>(vocabulary: I, companies: &[CompanyInfo]) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::with_lexicon(vocabulary, companies, default_synonyms(), default_stop_phrases())
    }

    pub fn with_lexicon<I, S>(
        vocabulary: I,
        companies: &[CompanyInfo],
        synonyms: SynonymTable,
        stops: StopPhrases,
    ) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let vocabulary = vocabulary
            .into_iter()
            .flat_map(|s| {
                s.as_ref()
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut aliases = Vec::new();
        let mut tickers = BTreeMap::new();
        for c in companies {
            tickers.insert(c.ticker.to_lowercase(), c.ticker.clone());
            for name in std::iter::once(&c.company).chain(&c.aliases) {
                let words: Vec<String> = tokenize(name)
                    .into_iter()
                    .filter(|w| w != ",")
                    .collect();
                if !words.is_empty() {
                    aliases.push((words, c.ticker.clone()));
                }
            }
        }
        aliases.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.cmp(b)));
        aliases.dedup();
        QueryParser {
            vocabulary,
            synonyms,
            stops,
            aliases,
            tickers,
        }
    }

    pub fn vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    pub fn synonyms(&self) -> &SynonymTable {
        &self.synonyms
    }

    pub fn parse(&self, raw: &str) -> Result<ParsedQuery> {
        self.parse_with_trace(raw).map(|(q, _)| q)
    }

    /// Parses and also returns the role given to every span of the query.
    pub fn parse_with_trace(&self, raw: &str) -> Result<(ParsedQuery, Vec<TokenRole>)> {
        let tokens = tokenize(raw);
        let words: Vec<&str> = tokens.iter().map(String::as_str).collect();
        let items = self.classify(&words);
        if !items
            .iter()
            .any(|it| !matches!(it, Item::Stop(_) | Item::Comma | Item::Then))
        {
            return Err(Error::NoQueryTerms);
        }
        Ok(self.assemble(items))
    }

    fn classify(&self, words: &[&str]) -> Vec<Item> {
        let mut items = Vec::new();
        let max_syn = self.synonyms.max_phrase_words().max(2);
        let mut i = 0;
        while i < words.len() {
            let rest = &words[i..];
            let w = rest[0];
            if w == "," {
                items.push(Item::Comma);
                i += 1;
                continue;
            }
            if w == "then" {
                items.push(Item::Then);
                i += 1;
                continue;
            }
            match date_at(rest) {
                Some(DateMatch::Range(n, range)) => {
                    items.push(Item::Date {
                        text: rest[..n].join(" "),
                        range,
                    });
                    i += n;
                    continue;
                }
                Some(DateMatch::Unsupported(n)) => {
                    items.push(Item::Inexact(rest[..n].join(" ")));
                    i += n;
                    continue;
                }
                None => {}
            }
            if let Some((n, ticker)) = self.attr_at(rest) {
                items.push(Item::Attr {
                    text: rest[..n].join(" "),
                    ticker,
                });
                i += n;
                continue;
            }
            if let Some((n, term, exact)) = self.phrase_at(rest, max_syn) {
                items.push(Item::Trend {
                    text: rest[..n].join(" "),
                    term,
                    exact,
                });
                i += n;
                continue;
            }
            if self.vocabulary.contains(w) {
                items.push(Item::Trend {
                    text: w.to_string(),
                    term: w.to_string(),
                    exact: true,
                });
                i += 1;
                continue;
            }
            let stop = self.stops.match_len(rest);
            if stop > 0 {
                items.push(Item::Stop(rest[..stop].join(" ")));
                i += stop;
                continue;
            }
            if w == "in" {
                // "in" not followed by a date carries no meaning.
                items.push(Item::Stop(w.to_string()));
            } else if w.bytes().all(|b| b.is_ascii_digit()) {
                items.push(Item::Inexact(w.to_string()));
            } else {
                let (term, exact) = self.resolve_word(w);
                items.push(Item::Trend {
                    text: w.to_string(),
                    term,
                    exact,
                });
            }
            i += 1;
        }
        items
    }

    fn attr_at(&self, words: &[&str]) -> Option<(usize, String)> {
        for (alias, ticker) in &self.aliases {
            if alias.len() <= words.len() && alias.iter().zip(words).all(|(a, b)| a == b) {
                return Some((alias.len(), ticker.clone()));
            }
        }
        let w = words[0];
        if self.vocabulary.contains(w) || self.synonyms.contains(w) || self.stops.is_stop_word(w) {
            return None;
        }
        self.tickers.get(w).map(|t| (1, t.clone()))
    }

    /// Multi-word verb phrases and synonym phrases.
    fn phrase_at(&self, words: &[&str], max: usize) -> Option<(usize, String, bool)> {
        for n in (2..=max.min(words.len())).rev() {
            let phrase = words[..n].join(" ");
            if let Some((_, t)) = PHRASES.iter().find(|(p, _)| *p == phrase) {
                let exact = self.vocabulary.contains(*t);
                return Some((n, t.to_string(), exact));
            }
            if self.synonyms.contains(&phrase) {
                return Some((n, phrase, false));
            }
        }
        None
    }

    /// Maps one word to its trend term and whether it matched the
    /// vocabulary exactly (directly or after lemmatization).
    pub fn resolve_word(&self, word: &str) -> (String, bool) {
        if self.vocabulary.contains(word) {
            return (word.to_string(), true);
        }
        let candidates = lemma_candidates(word);
        if let Some(c) = candidates.iter().find(|c| self.vocabulary.contains(*c)) {
            return (c.clone(), true);
        }
        if self.synonyms.contains(word) {
            return (word.to_string(), false);
        }
        if let Some(c) = candidates.iter().find(|c| self.synonyms.contains(c)) {
            return (c.clone(), false);
        }
        (fallback_lemma(word), false)
    }

    fn assemble(&self, items: Vec<Item>) -> (ParsedQuery, Vec<TokenRole>) {
        #[derive(PartialEq)]
        enum Pending {
            None,
            Then(usize),
            Comma(usize),
        }
        let mut trace: Vec<TokenRole> = Vec::with_capacity(items.len());
        let mut slots: Vec<Vec<String>> = vec![Vec::new()];
        let mut inexact: Vec<String> = Vec::new();
        let mut attr: Option<(String, String)> = None;
        let mut range: Option<DateRange> = None;
        let mut range_dropped = false;
        let mut pending = Pending::None;
        let mut last_was_trend = false;

        let push_inexact = |inexact: &mut Vec<String>, t: &str| {
            if !inexact.iter().any(|x| x == t) {
                inexact.push(t.to_string());
            }
        };

        for item in items {
            match item {
                Item::Stop(text) => trace.push(TokenRole {
                    text,
                    role: Role::Stop,
                }),
                Item::Then => {
                    let idx = trace.len();
                    trace.push(TokenRole {
                        text: "then".into(),
                        role: Role::Stop,
                    });
                    if !slots.last().unwrap().is_empty() {
                        pending = Pending::Then(idx);
                    }
                    last_was_trend = false;
                }
                Item::Comma => {
                    let idx = trace.len();
                    trace.push(TokenRole {
                        text: ",".into(),
                        role: Role::Stop,
                    });
                    if last_was_trend && pending == Pending::None {
                        pending = Pending::Comma(idx);
                    }
                    last_was_trend = false;
                }
                Item::Trend { text, term, exact } => {
                    match pending {
                        Pending::Then(idx) | Pending::Comma(idx) => {
                            trace[idx].role = Role::Separator;
                            slots.push(Vec::new());
                        }
                        Pending::None => {}
                    }
                    pending = Pending::None;
                    if !exact {
                        push_inexact(&mut inexact, &term);
                    }
                    let slot = slots.last_mut().unwrap();
                    if !slot.contains(&term) {
                        slot.push(term);
                    }
                    trace.push(TokenRole {
                        text,
                        role: if exact { Role::Trend } else { Role::Inexact },
                    });
                    last_was_trend = true;
                }
                Item::Attr { text, ticker } => {
                    if matches!(pending, Pending::Comma(_)) {
                        pending = Pending::None;
                    }
                    if attr.is_none() {
                        attr = Some((ticker, text.clone()));
                        trace.push(TokenRole {
                            text,
                            role: Role::Attr,
                        });
                    } else {
                        push_inexact(&mut inexact, &text);
                        trace.push(TokenRole {
                            text,
                            role: Role::Inexact,
                        });
                    }
                    last_was_trend = false;
                }
                Item::Date { text, range: r } => {
                    if matches!(pending, Pending::Comma(_)) {
                        pending = Pending::None;
                    }
                    let merged = match range {
                        None if !range_dropped => Some(r),
                        None => None,
                        Some(prev) => prev.intersect(&r),
                    };
                    if merged.is_none() {
                        range_dropped = true;
                        push_inexact(&mut inexact, &text);
                    }
                    range = merged;
                    trace.push(TokenRole {
                        text,
                        role: if range_dropped { Role::Inexact } else { Role::Date },
                    });
                    last_was_trend = false;
                }
                Item::Inexact(text) => {
                    if matches!(pending, Pending::Comma(_)) {
                        pending = Pending::None;
                    }
                    push_inexact(&mut inexact, &text);
                    trace.push(TokenRole {
                        text,
                        role: Role::Inexact,
                    });
                    last_was_trend = false;
                }
            }
        }
        slots.retain(|s| !s.is_empty());
        let event_type = if slots.len() >= 2 {
            EventType::Sequence
        } else {
            EventType::Single
        };
        let (attr, attr_mention) = match attr {
            Some((t, m)) => (Some(t), Some(m)),
            None => (None, None),
        };
        (
            ParsedQuery {
                event_type,
                trend_terms: slots,
                attr,
                attr_mention,
                date_range: range,
                inexact_terms: inexact,
            },
            trace,
        )
    }
}

/// Lowercases and splits a query into words; commas become their own token
/// and other punctuation is dropped.
pub fn tokenize(raw: &str) -> Vec<String> {
    let raw = raw.replace("'s", "").replace("\u{2019}s", "");
    let mut cleaned = String::with_capacity(raw.len() + 8);
    for c in raw.chars().flat_map(char::to_lowercase) {
        match c {
            ',' => cleaned.push_str(" , "),
            '\u{2019}' | '\'' => {}
            c if c.is_alphanumeric() || c == '-' || c == '\u{2212}' => cleaned.push(c),
            _ => cleaned.push(' '),
        }
    }
    cleaned
        .split_whitespace()
        .map(|w| w.trim_matches('-').to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

fn month_name(m: u32) -> &'static str {
    MONTHS[(m - 1) as usize]
}

fn prev_month(d: NaiveDate) -> NaiveDate {
    if d.month() == 1 {
        first_of(d.year() - 1, 12)
    } else {
        first_of(d.year(), d.month() - 1)
    }
}

/// Canonical query text for a parsed query. Parsing the rendering gives back
/// the same slots, attribute and date range (for month-aligned ranges).
pub fn render(q: &ParsedQuery) -> String {
    let mut parts: Vec<String> = vec![q
        .trend_terms
        .iter()
        .map(|slot| slot.join(" "))
        .collect::<Vec<_>>()
        .join(" then ")];
    if let Some(a) = &q.attr {
        parts.push(a.clone());
    }
    if let Some(r) = &q.date_range {
        parts.push(render_range(r));
    }
    parts.retain(|p| !p.is_empty());
    parts.join(" ")
}

fn render_range(r: &DateRange) -> String {
    if let (Some(g), Some(l)) = (r.gte, r.lt) {
        if g.day() == 1 && g.month() == 1 && l == first_of(g.year() + 1, 1) {
            return format!("in {}", g.year());
        }
        if g.day() == 1 && l == next_month(g) {
            return format!("in {} {}", month_name(g.month()), g.year());
        }
    }
    let mut out = Vec::new();
    if let Some(g) = r.gte {
        let m = prev_month(g);
        out.push(format!("after {} {}", month_name(m.month()), m.year()));
    }
    if let Some(l) = r.lt {
        out.push(format!("before {} {}", month_name(l.month()), l.year()));
    }
    out.join(" ")
}

impl fmt::Display for ParsedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}
