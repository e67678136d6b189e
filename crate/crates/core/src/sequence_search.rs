//! Ordered multi-slot trend queries ("up, flat, down").
//!
//! Each slot is retrieved on its own. Within a chart, chains pick one event
//! per slot of a contiguous run of slots, in time order, each event starting
//! no earlier than the previous one ends and at most `max_gap` days after.
//! Partial runs are scored with a penalty that favours longer runs and runs
//! that start at the first slot:
//!
//! `score = score_0 · (l_seq / (l_q + offset))²`

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::search_core::{
    retrieve, Filters, Index, ResolvedTerm, Scored, ScoredMatch, SearchOptions,
};

/// Per-slot highlight colours, cycled for slots beyond the palette.
pub const SLOT_PALETTE: [&str; 3] = ["red", "blue", "green"];

pub fn slot_color(slot: usize) -> &'static str {
    SLOT_PALETTE[slot % SLOT_PALETTE.len()]
}

/// A contiguous run of query slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubSequence {
    pub slots: Vec<usize>,
    /// Index of the first slot in the query.
    pub offset: usize,
}

/// Every contiguous run of `l_q` slots, longest first, then by offset.
pub fn enumerate_subsequences(l_q: usize) -> Vec<SubSequence> {
    let mut out = Vec::with_capacity(l_q * (l_q + 1) / 2);
    for len in (1..=l_q).rev() {
        for offset in 0..=(l_q - len) {
            out.push(SubSequence {
                slots: (offset..offset + len).collect(),
                offset,
            });
        }
    }
    out
}

/// `score_0 · (l_seq / (l_q + offset))²`.
pub fn penalized_score(score_0: f64, l_seq: usize, l_q: usize, offset: usize) -> f64 {
    let ratio = l_seq as f64 / (l_q + offset) as f64;
    score_0 * ratio * ratio
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMatch {
    pub slot_index: usize,
    #[serde(flatten)]
    pub event: ScoredMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMatch {
    pub chart_id: String,
    pub events: Vec<SlotMatch>,
    pub l_seq: usize,
    pub offset_seq: usize,
    pub score_0: f64,
    pub score: f64,
}

impl Scored for SequenceMatch {
    fn chart_id(&self) -> &str {
        &self.chart_id
    }
    fn composite(&self) -> f64 {
        self.score
    }
    fn tiebreak(&self) -> (NaiveDate, usize) {
        let first = &self.events[0].event;
        (first.start_date, first.doc)
    }
}

fn gap_ok(prev: &ScoredMatch, next: &ScoredMatch, max_gap_days: i64) -> bool {
    let gap = (next.start_date - prev.end_date).num_days();
    (0..=max_gap_days).contains(&gap)
}

fn make_match(
    chart_id: &str,
    chain: &[&ScoredMatch],
    sub: &SubSequence,
    l_q: usize,
) -> SequenceMatch {
    let score_0: f64 = chain.iter().map(|m| m.composite).sum();
    SequenceMatch {
        chart_id: chart_id.to_string(),
        events: chain
            .iter()
            .zip(&sub.slots)
            .map(|(m, &slot_index)| SlotMatch {
                slot_index,
                event: (*m).clone(),
            })
            .collect(),
        l_seq: sub.slots.len(),
        offset_seq: sub.offset,
        score_0,
        score: penalized_score(score_0, sub.slots.len(), l_q, sub.offset),
    }
}

/// Keeps the best chain per (chart, slots, first start): highest `score_0`,
/// then lowest document ids.
fn dedupe(chains: Vec<SequenceMatch>) -> Vec<SequenceMatch> {
    let mut best: BTreeMap<(String, Vec<usize>, NaiveDate), SequenceMatch> = BTreeMap::new();
    for c in chains {
        let key = (
            c.chart_id.clone(),
            c.events.iter().map(|e| e.slot_index).collect(),
            c.events[0].event.start_date,
        );
        let ids = |m: &SequenceMatch| m.events.iter().map(|e| e.event.doc).collect::<Vec<_>>();
        match best.get(&key) {
            Some(cur)
                if cur.score_0 > c.score_0
                    || (cur.score_0 == c.score_0 && ids(cur) <= ids(&c)) => {}
            _ => {
                best.insert(key, c);
            }
        }
    }
    best.into_values().collect()
}

fn by_chart<'a>(per_slot: &'a [Vec<ScoredMatch>]) -> BTreeMap<&'a str, Vec<Vec<&'a ScoredMatch>>> {
    let mut charts: BTreeMap<&str, Vec<Vec<&ScoredMatch>>> = BTreeMap::new();
    for (slot, matches) in per_slot.iter().enumerate() {
        for m in matches {
            charts
                .entry(m.chart_id.as_str())
                .or_insert_with(|| vec![Vec::new(); per_slot.len()])[slot]
                .push(m);
        }
    }
    for lists in charts.values_mut() {
        for l in lists.iter_mut() {
            l.sort_by(|a, b| a.start_date.cmp(&b.start_date).then(a.doc.cmp(&b.doc)));
        }
    }
    charts
}

/// All valid chains for one run of slots, deduplicated.
/// `per_slot[i]` holds the matches of query slot `i`.
pub fn join_sequences(
    per_slot: &[Vec<ScoredMatch>],
    sub: &SubSequence,
    max_gap_days: i64,
) -> Vec<SequenceMatch> {
    let l_q = per_slot.len();
    let mut out = Vec::new();
    for (chart, lists) in by_chart(per_slot) {
        let mut chain: Vec<&ScoredMatch> = Vec::with_capacity(sub.slots.len());
        extend_chain(&lists, sub, max_gap_days, chart, l_q, &mut chain, &mut out);
    }
    dedupe(out)
}

fn extend_chain<'a>(
    lists: &[Vec<&'a ScoredMatch>],
    sub: &SubSequence,
    max_gap_days: i64,
    chart: &str,
    l_q: usize,
    chain: &mut Vec<&'a ScoredMatch>,
    out: &mut Vec<SequenceMatch>,
) {
    if chain.len() == sub.slots.len() {
        out.push(make_match(chart, chain, sub, l_q));
        return;
    }
    let list = &lists[sub.slots[chain.len()]];
    let candidates: &[&ScoredMatch] = match chain.last() {
        None => list,
        Some(prev) => {
            let lo = list.partition_point(|m| m.start_date < prev.end_date);
            let latest = prev.end_date + chrono::Duration::days(max_gap_days);
            let hi = list.partition_point(|m| m.start_date <= latest);
            &list[lo..hi.max(lo)]
        }
    };
    for m in candidates {
        if chain.last().is_some_and(|p| !gap_ok(p, m, max_gap_days)) {
            continue;
        }
        chain.push(m);
        extend_chain(lists, sub, max_gap_days, chart, l_q, chain, out);
        chain.pop();
    }
}

/// Reference implementation of [`join_sequences`]: tries every combination
/// of one event per slot and keeps the valid ones.
pub fn join_sequences_exhaustive(
    per_slot: &[Vec<ScoredMatch>],
    sub: &SubSequence,
    max_gap_days: i64,
) -> Vec<SequenceMatch> {
    let l_q = per_slot.len();
    let mut out = Vec::new();
    for (chart, lists) in by_chart(per_slot) {
        let slot_lists: Vec<&Vec<&ScoredMatch>> = sub.slots.iter().map(|&s| &lists[s]).collect();
        if slot_lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        let mut chain = Vec::with_capacity(slot_lists.len());
        every_chain(&slot_lists, &mut chain, &mut |chain| {
            if chain.windows(2).all(|w| gap_ok(w[0], w[1], max_gap_days)) {
                out.push(make_match(chart, chain, sub, l_q));
            }
        });
    }
    dedupe(out)
}

fn every_chain<'a>(
    lists: &[&Vec<&'a ScoredMatch>],
    chain: &mut Vec<&'a ScoredMatch>,
    visit: &mut dyn FnMut(&[&'a ScoredMatch]),
) {
    if chain.len() == lists.len() {
        visit(chain);
        return;
    }
    for m in lists[chain.len()].iter() {
        chain.push(m);
        every_chain(lists, chain, visit);
        chain.pop();
    }
}

/// Runs a sequence query: per-slot retrieval, then chains for every
/// contiguous run of slots (full and partial matches together).
pub fn search_sequence(
    index: &Index,
    slots: &[Vec<ResolvedTerm>],
    filters: &Filters,
    opts: &SearchOptions,
    max_gap_days: i64,
) -> Vec<SequenceMatch> {
    let per_slot: Vec<Vec<ScoredMatch>> = slots
        .iter()
        .map(|terms| {
            retrieve(index, terms, filters, opts)
                .iter()
                .map(|c| ScoredMatch::new(index, c))
                .collect()
        })
        .collect();
    join_all(&per_slot, max_gap_days)
}

/// Chains for every contiguous run of slots over already-scored per-slot
/// matches.
pub fn join_all(per_slot: &[Vec<ScoredMatch>], max_gap_days: i64) -> Vec<SequenceMatch> {
    enumerate_subsequences(per_slot.len())
        .iter()
        .flat_map(|sub| join_sequences(per_slot, sub, max_gap_days))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trend_labeler::EventKind;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn m(doc: usize, chart: &str, start: &str, end: &str, composite: f64) -> ScoredMatch {
        ScoredMatch {
            doc,
            chart_id: chart.into(),
            start_date: d(start),
            end_date: d(end),
            label: "x".into(),
            kind: EventKind::Slope,
            matched_tokens: 1,
            label_score: 1.0,
            saliency: composite,
            composite,
        }
    }

    #[test]
    fn subsequences() {
        let subs = enumerate_subsequences(3);
        let got: Vec<(Vec<usize>, usize)> = subs.into_iter().map(|s| (s.slots, s.offset)).collect();
        assert_eq!(
            got,
            vec![
                (vec![0, 1, 2], 0),
                (vec![0, 1], 0),
                (vec![1, 2], 1),
                (vec![0], 0),
                (vec![1], 1),
                (vec![2], 2),
            ]
        );
        assert_eq!(enumerate_subsequences(2).len(), 3);
    }

    #[test]
    fn penalties() {
        assert_eq!(penalized_score(1.0, 3, 3, 0), 1.0);
        assert!((penalized_score(1.0, 2, 3, 0) - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(penalized_score(1.0, 2, 3, 1), 0.25);
        assert_eq!(penalized_score(0.37, 4, 4, 0), 0.37);
    }

    #[test]
    fn join_rules() {
        let full = SubSequence {
            slots: vec![0, 1],
            offset: 0,
        };
        let a = m(0, "X", "2015-01-01", "2015-01-10", 0.5);
        let ok = vec![vec![a.clone()], vec![m(1, "X", "2015-01-12", "2015-01-20", 0.5)]];
        assert_eq!(join_sequences(&ok, &full, 14).len(), 1);
        let far = vec![vec![a.clone()], vec![m(1, "X", "2015-01-30", "2015-02-05", 0.5)]];
        assert!(join_sequences(&far, &full, 14).is_empty());
        let overlap = vec![
            vec![m(0, "X", "2015-01-01", "2015-01-15", 0.5)],
            vec![m(1, "X", "2015-01-10", "2015-01-20", 0.5)],
        ];
        assert!(join_sequences(&overlap, &full, 14).is_empty());
        let other_chart = vec![vec![a], vec![m(1, "Y", "2015-01-12", "2015-01-20", 0.5)]];
        assert!(join_sequences(&other_chart, &full, 14).is_empty());
    }

    #[test]
    fn dedupe_keeps_best_chain() {
        let full = SubSequence {
            slots: vec![0, 1],
            offset: 0,
        };
        let per_slot = vec![
            vec![m(0, "X", "2015-01-01", "2015-01-10", 0.5)],
            vec![
                m(1, "X", "2015-01-10", "2015-01-20", 0.2),
                m(2, "X", "2015-01-11", "2015-01-20", 0.4),
            ],
        ];
        let got = join_sequences(&per_slot, &full, 14);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].events[1].event.doc, 2);
        assert!((got[0].score_0 - 0.9).abs() < 1e-12);
        assert_eq!(got, join_sequences_exhaustive(&per_slot, &full, 14));
    }

    #[test]
    fn palette_cycles() {
        assert_eq!(slot_color(0), "red");
        assert_eq!(slot_color(2), "green");
        assert_eq!(slot_color(3), "red");
    }
}
