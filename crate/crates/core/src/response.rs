//! The search response served by the HTTP API and printed by the CLI, and
//! the tile text that describes each result.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::facets::FacetNode;
use crate::query_parser::ParsedQuery;
use crate::search_core::{Bucket, ScoredMatch};
use crate::sequence_search::SequenceMatch;
use crate::trend_labeler::EventKind;

/// Matches described in a tile's text.
pub const SNIPPET_COUNT: usize = 3;

/// One highlighted span of a result chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventView {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub label: String,
    pub kind: EventKind,
    pub label_score: f64,
    pub saliency: f64,
    pub composite: f64,
    /// Query slot of a sequence match (absent for single queries).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_index: Option<usize>,
    /// Rank of the sequence match this span belongs to within its bucket.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_index: Option<usize>,
}

/// One result tile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketView {
    pub chart_id: String,
    /// Matched events (single queries) or matched chains (sequence queries).
    pub match_count: usize,
    pub bucket_score: f64,
    /// Spans, best match first; a sequence match contributes one span per slot.
    pub events: Vec<EventView>,
    /// Fragments for the best matches, one per match.
    pub snippets: Vec<String>,
    /// The fragments composed into the tile sentence.
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    /// Present exactly when some query term was not matched exactly.
    pub notification: Option<String>,
    pub facet_tree: Vec<FacetNode>,
    pub buckets: Vec<BucketView>,
    pub query_echo: ParsedQuery,
    /// 1-based page number.
    pub page: usize,
    pub page_count: usize,
    pub total_buckets: usize,
}

/// Long date as shown on tiles, e.g. "March 13, 2014".
pub fn long_date(d: NaiveDate) -> String {
    d.format("%B %-d, %Y").to_string()
}

fn noun_phrase(label: &str, kind: EventKind) -> String {
    match kind {
        EventKind::Shape | EventKind::Superlative => {
            let article = if label.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
            format!("{article} {label}")
        }
        EventKind::Slope | EventKind::Compound => label.to_string(),
    }
}

/// "<label> from <start> to <end>".
pub fn snippet(label: &str, kind: EventKind, start: NaiveDate, end: NaiveDate) -> String {
    format!(
        "{} from {} to {}",
        noun_phrase(label, kind),
        long_date(start),
        long_date(end)
    )
}

/// "<label>, then <label> from <start> to <end>" for a chain.
pub fn sequence_snippet(m: &SequenceMatch) -> String {
    let labels: Vec<String> = m
        .events
        .iter()
        .map(|s| noun_phrase(&s.event.label, s.event.kind))
        .collect();
    let first = &m.events[0].event;
    let last = &m.events[m.events.len() - 1].event;
    format!(
        "{} from {} to {}",
        labels.join(", then "),
        long_date(first.start_date),
        long_date(last.end_date)
    )
}

/// "This stock was a, b, and c." (sequence fragments are joined with "; ").
pub fn compose_sentence(fragments: &[String], sequence: bool) -> String {
    let body = match fragments {
        [] => return String::new(),
        [one] => one.clone(),
        [a, b] if !sequence => format!("{a} and {b}"),
        _ if sequence => fragments.join("; "),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    };
    format!("This stock was {body}.")
}

pub fn single_bucket_view(b: &Bucket<ScoredMatch>) -> BucketView {
    let events: Vec<EventView> = b
        .events
        .iter()
        .map(|m| EventView {
            start_date: m.start_date,
            end_date: m.end_date,
            label: m.label.clone(),
            kind: m.kind,
            label_score: m.label_score,
            saliency: m.saliency,
            composite: m.composite,
            slot_index: None,
            match_index: None,
        })
        .collect();
    let snippets: Vec<String> = b
        .events
        .iter()
        .take(SNIPPET_COUNT)
        .map(|m| snippet(&m.label, m.kind, m.start_date, m.end_date))
        .collect();
    BucketView {
        chart_id: b.chart_id.clone(),
        match_count: b.events.len(),
        bucket_score: b.bucket_score,
        sentence: compose_sentence(&snippets, false),
        events,
        snippets,
    }
}

pub fn sequence_bucket_view(b: &Bucket<SequenceMatch>) -> BucketView {
    let events = b
        .events
        .iter()
        .enumerate()
        .flat_map(|(i, m)| {
            m.events.iter().map(move |s| EventView {
                start_date: s.event.start_date,
                end_date: s.event.end_date,
                label: s.event.label.clone(),
                kind: s.event.kind,
                label_score: s.event.label_score,
                saliency: s.event.saliency,
                composite: s.event.composite,
                slot_index: Some(s.slot_index),
                match_index: Some(i),
            })
        })
        .collect();
    let snippets: Vec<String> = b.events.iter().take(SNIPPET_COUNT).map(sequence_snippet).collect();
    BucketView {
        chart_id: b.chart_id.clone(),
        match_count: b.events.len(),
        bucket_score: b.bucket_score,
        sentence: compose_sentence(&snippets, true),
        events,
        snippets,
    }
}

/// Message for terms that were matched through synonyms, partial matches or
/// not at all.
pub fn inexact_notification(inexact_terms: &[String]) -> Option<String> {
    if inexact_terms.is_empty() {
        return None;
    }
    let quoted: Vec<String> = inexact_terms.iter().map(|t| format!("'{t}'")).collect();
    let list = quoted.join(", ");
    Some(format!(
        "No exact matches for {list}. Synonyms or partial matches for {list} are shown below."
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn tile_text() {
        let a = snippet("soaring", EventKind::Slope, d("2014-03-13"), d("2014-03-24"));
        assert_eq!(a, "soaring from March 13, 2014 to March 24, 2014");
        let b = snippet("maximum", EventKind::Superlative, d("2015-07-10"), d("2015-08-21"));
        assert_eq!(b, "a maximum from July 10, 2015 to August 21, 2015");
        assert_eq!(
            compose_sentence(&[a.clone()], false),
            "This stock was soaring from March 13, 2014 to March 24, 2014."
        );
        let three = compose_sentence(&["x".into(), "y".into(), "z".into()], false);
        assert_eq!(three, "This stock was x, y, and z.");
        assert_eq!(compose_sentence(&["x".into(), "y".into()], true), "This stock was x; y.");
        assert_eq!(compose_sentence(&[], false), "");
    }

    #[test]
    fn notification_only_for_inexact_terms() {
        assert!(inexact_notification(&[]).is_none());
        let n = inexact_notification(&["up".into()]).unwrap();
        assert!(n.starts_with("No exact matches for 'up'"));
    }
}
