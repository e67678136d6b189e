mod common;

use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use proptest::prelude::*;
use trendsearch::datastore::Corpus;
use trendsearch::engine::Engine;
use trendsearch::facets::{family_of, is_excluded};
use trendsearch::label_models::{Kde1D, KdePeriodic2D, LabelModels};
use trendsearch::lexicon::default_synonyms;
use trendsearch::query_parser::{render, DateRange};
use trendsearch::search_core::{
    resolve_terms, retrieve, retrieve_brute_force, Filters, Index, ScoredMatch, SearchOptions,
};
use trendsearch::sequence_search::{
    enumerate_subsequences, join_sequences, join_sequences_exhaustive, penalized_score,
};
use trendsearch::trend_labeler::{
    kept_count, label_corpus, linearize, normalize, saliency, ChartExtents, EventKind,
    LabelerConfig, LabeledEvent, Observation, TimeSeries,
};
use trendsearch::Config;

use common::{day, event, label_modes, LABELS, QUERY_WORDS};

fn corpus_strategy(max_docs: usize) -> impl Strategy<Value = Vec<LabeledEvent>> {
    prop::collection::vec(
        (0..4usize, 0..LABELS.len(), 0..700i64, 1..60i64, 0.0..1.5f64),
        1..max_docs,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .map(|(c, l, s, len, sal)| event(["AAA", "BBB", "CCC", "DDD"][c], LABELS[l], s, len, sal))
            .collect()
    })
}

fn terms_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(QUERY_WORDS), 1..4)
        .prop_map(|ws| ws.into_iter().map(String::from).collect())
}

fn filters_strategy() -> impl Strategy<Value = Filters> {
    (
        prop::option::of(prop::sample::select(vec!["AAA", "BBB", "ZZZ"])),
        prop::option::of((0..700i64, 1..400i64)),
    )
        .prop_map(|(attr, range)| Filters {
            attr: attr.map(String::from),
            date_range: range.map(|(s, len)| DateRange {
                gte: Some(day(s)),
                lt: Some(day(s + len)),
            }),
        })
}

/// Random walk with occasional jumps, always at least three points.
fn series_strategy(id: &'static str) -> impl Strategy<Value = TimeSeries> {
    (prop::collection::vec(-3.0..3.0f64, 3..120), 1.0..100.0f64).prop_map(move |(steps, start)| {
        let mut v = start;
        let points = steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                v += s;
                Observation {
                    date: day(i as i64 * 2),
                    value: v,
                }
            })
            .collect();
        TimeSeries::new(id, points).unwrap()
    })
}

fn small_models() -> LabelModels {
    let mut m = LabelModels::default();
    for (l, a) in [("plunging", -70.0), ("falling", -35.0), ("flat", 0.0), ("rising", 35.0), ("soaring", 70.0)] {
        m.slope.insert(l.into(), Kde1D::new(l, vec![a - 4.0, a, a + 3.0], 5.0).unwrap());
    }
    for (l, a) in [("slowly rising", 15.0), ("sharply falling", -60.0)] {
        m.compound.insert(l.into(), Kde1D::new(l, vec![a], 5.0).unwrap());
    }
    for (l, a, r) in [("peak", 70.0, 0.0), ("valley", 70.0, 180.0), ("ramp", 150.0, 300.0)] {
        m.shape.insert(l.into(), KdePeriodic2D::new(l, vec![(a, r)], 15.0).unwrap());
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn indexed_retrieval_equals_linear_scan(
        events in corpus_strategy(300),
        raw in terms_strategy(),
        filters in filters_strategy(),
        cap in 1..400usize,
    ) {
        let index = Index::build(events, label_modes());
        let opts = SearchOptions { retrieval_cap: cap, ..SearchOptions::default() };
        let terms = resolve_terms(&index, &raw, &default_synonyms(), &opts);
        prop_assert_eq!(
            retrieve(&index, &terms, &filters, &opts),
            retrieve_brute_force(&index, &terms, &filters, &opts)
        );
    }

    #[test]
    fn descriptor_terms_constrain_every_result(events in corpus_strategy(200), raw in terms_strategy()) {
        let index = Index::build(events, label_modes());
        let opts = SearchOptions::default();
        let terms = resolve_terms(&index, &raw, &default_synonyms(), &opts);
        for c in retrieve(&index, &terms, &Filters::default(), &opts) {
            let doc = index.doc(c.doc);
            for t in terms.iter().filter(|t| t.descriptor) {
                prop_assert!(t.matches(doc), "{:?} returned {}", t, doc.event.label);
            }
        }
    }

    #[test]
    fn fast_decline_never_returns_fast_increase(mut events in corpus_strategy(200)) {
        // The filter binds only when the descriptor occurs in the corpus.
        events.push(event("AAA", "fast decline", 0, 10, 0.1));
        events.push(event("BBB", "fast increase", 0, 10, 0.1));
        let index = Index::build(events, label_modes());
        let opts = SearchOptions::default();
        let terms = resolve_terms(&index, &["fast", "decline"], &default_synonyms(), &opts);
        for c in retrieve(&index, &terms, &Filters::default(), &opts) {
            prop_assert_ne!(index.doc(c.doc).event.label.as_str(), "fast increase");
        }
    }

    #[test]
    fn results_are_ranked(events in corpus_strategy(200), raw in terms_strategy()) {
        let index = Index::build(events, label_modes());
        let opts = SearchOptions::default();
        let terms = resolve_terms(&index, &raw, &default_synonyms(), &opts);
        let got = retrieve(&index, &terms, &Filters::default(), &opts);
        for w in got.windows(2) {
            prop_assert!((w[0].matched_terms, w[0].overlap) >= (w[1].matched_terms, w[1].overlap));
        }
    }

    #[test]
    fn exclusions_remove_exactly_the_excluded_labels(
        events in corpus_strategy(150),
        excluded in prop::collection::btree_set(prop::sample::select(vec![
            "decline", "increase", "fast decline", "soaring", "slowly soaring", "tanking",
        ]), 0..3),
        q in prop::sample::select(vec!["decline", "fast decline", "soaring", "tanking", "increase", "peak"]),
    ) {
        let excluded: BTreeSet<String> = excluded.into_iter().map(String::from).collect();
        let charts: BTreeMap<String, TimeSeries> = ["AAA", "BBB", "CCC", "DDD"]
            .iter()
            .map(|c| {
                let pts = (0..800).map(|i| Observation { date: day(i), value: i as f64 }).collect();
                (c.to_string(), TimeSeries::new(*c, pts).unwrap())
            })
            .collect();
        let models = LabelModels::default();
        let corpus = Corpus::new(charts, Vec::new(), events, models.fingerprint()).unwrap();
        let config = Config { page_size: 1000, ..Config::default() };
        let engine = Engine::new(config, models, corpus).unwrap();
        let spans = |exclude: &BTreeSet<String>| -> BTreeSet<(String, String, String)> {
            engine
                .search(q, exclude, 1)
                .unwrap()
                .buckets
                .iter()
                .flat_map(|b| b.events.iter().map(move |e| {
                    (b.chart_id.clone(), e.label.clone(), e.start_date.to_string())
                }))
                .collect()
        };
        let all = spans(&BTreeSet::new());
        let kept = spans(&excluded);
        let expected: BTreeSet<_> = all
            .iter()
            .filter(|(_, l, _)| !is_excluded(l, common::kind_of(l), &excluded))
            .cloned()
            .collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn sequence_join_equals_exhaustive_enumeration(
        slots in prop::collection::vec(
            prop::collection::vec((0..3usize, 0..300i64, 0..30i64, 0.01..1.0f64), 0..25),
            1..4,
        ),
        max_gap in 0..20i64,
    ) {
        let mut doc = 0;
        let per_slot: Vec<Vec<ScoredMatch>> = slots
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|&(c, s, len, score)| {
                        doc += 1;
                        ScoredMatch {
                            doc,
                            chart_id: ["AAA", "BBB", "CCC"][c].into(),
                            start_date: day(s),
                            end_date: day(s + len),
                            label: "x".into(),
                            kind: EventKind::Slope,
                            matched_tokens: 1,
                            label_score: 1.0,
                            saliency: score,
                            composite: score,
                        }
                    })
                    .collect()
            })
            .collect();
        for sub in enumerate_subsequences(per_slot.len()) {
            let fast = join_sequences(&per_slot, &sub, max_gap);
            let slow = join_sequences_exhaustive(&per_slot, &sub, max_gap);
            prop_assert_eq!(&fast, &slow);
            for m in &fast {
                let expect = penalized_score(m.score_0, m.l_seq, per_slot.len(), m.offset_seq);
                prop_assert!((m.score - expect).abs() < 1e-12);
                for w in m.events.windows(2) {
                    let gap = w[1].event.start_date - w[0].event.end_date;
                    prop_assert!(gap >= Duration::zero() && gap <= Duration::days(max_gap));
                }
            }
        }
    }

    #[test]
    fn rdp_error_is_bounded(series in series_strategy("S"), eps in prop::sample::select(vec![0.03, 0.1, 0.2])) {
        let norm = normalize(&series, 3.0).unwrap();
        let segs = linearize(&norm, eps);
        prop_assert_eq!(segs[0].start_idx, 0);
        prop_assert_eq!(segs[segs.len() - 1].end_idx, norm.xs.len() - 1);
        for s in &segs {
            let (ax, ay) = (norm.xs[s.start_idx], norm.ys[s.start_idx]);
            let (bx, by) = (norm.xs[s.end_idx], norm.ys[s.end_idx]);
            let len = (bx - ax).hypot(by - ay);
            for i in s.start_idx..=s.end_idx {
                let (px, py) = (norm.xs[i], norm.ys[i]);
                let d = ((bx - ax) * (ay - py) - (ax - px) * (by - ay)).abs() / len;
                prop_assert!(d <= eps + 1e-12, "point {} is {} from its segment", i, d);
            }
        }
    }

    #[test]
    fn labels_survive_value_rescaling(
        series in series_strategy("S"),
        scale in 0.01..100.0f64,
        offset in -1000.0..1000.0f64,
    ) {
        let models = small_models();
        let cfg = LabelerConfig::default();
        let scaled = TimeSeries::new(
            "S",
            series.points.iter().map(|p| Observation { date: p.date, value: scale * p.value + offset }).collect(),
        ).unwrap();
        let key = |evs: Vec<LabeledEvent>| -> Vec<(String, EventKind, String, String, Option<u64>)> {
            evs.into_iter()
                .map(|e| (e.label, e.kind, e.start_date.to_string(), e.end_date.to_string(), e.epsilon_level.map(f64::to_bits)))
                .collect()
        };
        let a = key(label_corpus(&[series], &models, &cfg).unwrap());
        let b = key(label_corpus(&[scaled], &models, &cfg).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn pruning_keeps_the_densest_share_of_each_pool(
        s1 in series_strategy("A"),
        s2 in series_strategy("B"),
        keep in 0.05..1.0f64,
    ) {
        let models = small_models();
        let base = LabelerConfig::default();
        let charts = [s1, s2];
        let all = label_corpus(&charts, &models, &LabelerConfig { keep: 1.0, ..base.clone() }).unwrap();
        let kept = label_corpus(&charts, &models, &LabelerConfig { keep, ..base }).unwrap();
        let pools = |evs: &[LabeledEvent]| {
            let mut m: BTreeMap<(EventKind, Option<u64>), Vec<f64>> = BTreeMap::new();
            for e in evs {
                m.entry((e.kind, e.epsilon_level.map(f64::to_bits))).or_default().push(e.density);
            }
            m
        };
        let (all_pools, kept_pools) = (pools(&all), pools(&kept));
        for (key, densities) in &all_pools {
            let got = kept_pools.get(key).map_or(0, Vec::len);
            if key.0 == EventKind::Superlative {
                prop_assert_eq!(got, densities.len());
                continue;
            }
            prop_assert_eq!(got, kept_count(keep, densities.len()));
            if let Some(k) = kept_pools.get(key) {
                let min_kept = k.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut sorted = densities.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                if got < sorted.len() {
                    prop_assert!(min_kept >= sorted[got]);
                }
            }
        }
    }

    #[test]
    fn kde_integrates_to_one(
        points in prop::collection::vec(-90.0..90.0f64, 1..40),
        h in 1.0..15.0f64,
    ) {
        let kde = Kde1D::new("x", points.clone(), h).unwrap();
        let lo = points.iter().cloned().fold(f64::INFINITY, f64::min) - 10.0 * h;
        let hi = points.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 10.0 * h;
        let n = 20_000;
        let dx = (hi - lo) / n as f64;
        let mut sum = 0.5 * (kde.density(lo) + kde.density(hi));
        for i in 1..n {
            sum += kde.density(lo + i as f64 * dx);
        }
        prop_assert!((sum * dx - 1.0).abs() < 1e-3);
    }

    #[test]
    fn periodic_density_is_continuous_at_the_seam(
        points in prop::collection::vec((0.0..180.0f64, 0.0..360.0f64), 1..20),
        a in 0.0..180.0f64,
    ) {
        let kde = KdePeriodic2D::new("x", points, 15.0).unwrap();
        let at_zero = kde.density(a, 0.0).unwrap();
        let below_full_turn = kde.density(a, 360.0 - 1e-9).unwrap();
        prop_assert!((at_zero - below_full_turn).abs() < 1e-9);
    }

    #[test]
    fn render_is_a_fixed_point(words in prop::collection::vec(prop::sample::select(vec![
        "show me", "stocks that", "tanking", "falling", "rising", "slowly", "sharply", "peak",
        "up", "down", "tanked", "fast", ",", "then", "alaska airlines", "AMGN", "in 2015",
        "before November 2016", "after March 2014", "in July 2016", "was", "increased",
    ]), 1..8)) {
        let parser = common::parser();
        let raw = words.join(" ");
        let Ok(first) = parser.parse(&raw) else { return Ok(()) };
        let text = render(&first);
        // Only inexact leftovers (e.g. disjoint dates): nothing structured to round-trip.
        prop_assume!(!text.is_empty());
        let Ok(second) = parser.parse(&text) else {
            return Err(TestCaseError::fail(format!("{text:?} (from {raw:?}) does not parse")));
        };
        prop_assert_eq!(&second.trend_terms, &first.trend_terms, "{:?} -> {:?}", raw, text);
        prop_assert_eq!(&second.attr, &first.attr);
        prop_assert_eq!(second.date_range, first.date_range);
        prop_assert_eq!(second.event_type, first.event_type);
        prop_assert_eq!(render(&second), text);
    }

    #[test]
    fn date_intersection_is_a_lattice_meet(
        a in prop::option::of(0..400i64), b in prop::option::of(0..400i64),
        c in prop::option::of(0..400i64), d in prop::option::of(0..400i64),
        probe in 0..400i64,
    ) {
        let r1 = DateRange { gte: a.map(day), lt: b.map(day) };
        let r2 = DateRange { gte: c.map(day), lt: d.map(day) };
        prop_assume!(r1.is_valid() && r2.is_valid());
        let inside = |r: &DateRange, x| r.gte.map_or(true, |g| day(x) >= g) && r.lt.map_or(true, |l| day(x) < l);
        prop_assert_eq!(r1.intersect(&r2), r2.intersect(&r1));
        match r1.intersect(&r2) {
            Some(r) => prop_assert_eq!(inside(&r, probe), inside(&r1, probe) && inside(&r2, probe)),
            None => prop_assert!(!(inside(&r1, probe) && inside(&r2, probe))),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn saliency_grows_with_span(
        x0 in 0..1000i64, dx in 0..500i64, grow_x in 0..200i64,
        y_lo in -50.0..50.0f64, y_span in 0.0..50.0f64, dy in -1.0..1.0f64, grow_y in 0.0..1.0f64,
        kind in prop::sample::select(vec![EventKind::Slope, EventKind::Compound, EventKind::Shape, EventKind::Superlative]),
    ) {
        let ext = ChartExtents {
            x_chart_min: day(0),
            x_chart_max: day(2000),
            y_chart_min: y_lo,
            y_chart_max: y_lo + y_span,
        };
        let make = |len: i64, change: f64| {
            let mut e = event("S", "x", x0, len, 0.0);
            e.kind = kind;
            e.x_event_start = trendsearch::trend_labeler::day_number(e.start_date) as f64;
            e.x_event_end = e.x_event_start + len as f64;
            e.y_event_start = y_lo;
            e.y_event_end = y_lo + change * y_span;
            e.y_event_min = y_lo.min(e.y_event_end);
            e.y_event_max = y_lo.max(e.y_event_end);
            e
        };
        let grown = if dy >= 0.0 { dy + grow_y } else { dy - grow_y };
        let small = saliency(&make(dx, dy), &ext);
        let big = saliency(&make(dx + grow_x, grown), &ext);
        prop_assert!(small.is_finite() && small >= 0.0);
        prop_assert!(big >= small - 1e-15, "{} < {}", big, small);
    }
}

#[test]
fn family_of_strips_only_compound_modifiers() {
    assert_eq!(family_of("slowly soaring", EventKind::Compound), "soaring");
    assert_eq!(family_of("slowly soaring", EventKind::Slope), "slowly soaring");
    assert_eq!(family_of("peak", EventKind::Shape), "peak");
}
