#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::OnceLock;

use chrono::{Duration, NaiveDate};
use trendsearch::datastore::{
    load_companies_csv, load_series_csv, load_shape_labels_csv, load_slope_labels_csv,
};
use trendsearch::label_models::{LabelModels, LabelSample, ShapeSample};
use trendsearch::query_parser::{CompanyInfo, QueryParser};
use trendsearch::trend_labeler::{EventKind, LabeledEvent, TimeSeries};
use trendsearch::Config;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn slope_rows() -> &'static Vec<LabelSample> {
    static ROWS: OnceLock<Vec<LabelSample>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let mut rows = load_slope_labels_csv(&fixtures().join("labels_exp1.csv")).unwrap();
        rows.extend(load_slope_labels_csv(&fixtures().join("labels_exp2.csv")).unwrap());
        rows
    })
}

pub fn shape_rows() -> &'static Vec<ShapeSample> {
    static ROWS: OnceLock<Vec<ShapeSample>> = OnceLock::new();
    ROWS.get_or_init(|| load_shape_labels_csv(&fixtures().join("labels_exp3.csv")).unwrap())
}

/// Models fitted on the bundled label fixtures with default settings.
pub fn models() -> &'static LabelModels {
    static MODELS: OnceLock<LabelModels> = OnceLock::new();
    MODELS.get_or_init(|| {
        LabelModels::fit(slope_rows(), shape_rows(), &Config::default())
            .unwrap()
            .0
    })
}

pub fn series() -> &'static BTreeMap<String, TimeSeries> {
    static SERIES: OnceLock<BTreeMap<String, TimeSeries>> = OnceLock::new();
    SERIES.get_or_init(|| load_series_csv(&fixtures().join("series.csv")).unwrap())
}

pub fn companies() -> Vec<CompanyInfo> {
    load_companies_csv(&fixtures().join("companies.csv")).unwrap()
}

/// A parser over every word the fitted models know.
pub fn parser() -> QueryParser {
    let mut vocab: Vec<String> = models().labels().map(String::from).collect();
    vocab.extend(["maximum".to_string(), "minimum".to_string()]);
    QueryParser::new(vocab, &companies())
}

pub fn day(offset: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2014, 1, 1).unwrap() + Duration::days(offset)
}

pub fn kind_of(label: &str) -> EventKind {
    if label.contains(' ') {
        EventKind::Compound
    } else {
        EventKind::Slope
    }
}

/// A document-only event: dates, label and saliency matter, the rest is filler.
pub fn event(chart: &str, label: &str, start: i64, len: i64, saliency: f64) -> LabeledEvent {
    LabeledEvent {
        chart_id: chart.into(),
        start_date: day(start),
        end_date: day(start + len),
        label: label.into(),
        kind: kind_of(label),
        density: 0.01,
        saliency,
        epsilon_level: Some(0.1),
        x_event_start: 0.0,
        x_event_end: 0.0,
        y_event_start: 0.0,
        y_event_end: 0.0,
        y_event_min: 0.0,
        y_event_max: 0.0,
        perceived_angle: None,
        shape_angle: None,
        rotation: None,
    }
}

/// Labels used for randomized corpora: descriptors, compounds sharing
/// modifiers, and near-duplicate spellings for fuzzy matching.
pub const LABELS: &[&str] = &[
    "fast decline",
    "fast increase",
    "slow decline",
    "slow increase",
    "decline",
    "increase",
    "tanking",
    "sharply tanking",
    "soaring",
    "slowly soaring",
    "plateau",
    "peak",
];

/// Query words for randomized retrieval: indexed words, synonyms, typos
/// and unknown words.
pub const QUERY_WORDS: &[&str] = &[
    "fast", "slow", "decline", "increase", "tanking", "tankng", "tanked", "soaring", "soarin",
    "sharply", "slowly", "plateau", "peak", "up", "down", "flat", "sideways", "quickly",
];

/// Slope modes for the labels above, so family selectors resolve.
pub fn label_modes() -> BTreeMap<String, f64> {
    [
        ("fast decline", -60.0),
        ("fast increase", 60.0),
        ("slow decline", -15.0),
        ("slow increase", 15.0),
        ("decline", -35.0),
        ("increase", 35.0),
        ("tanking", -80.0),
        ("sharply tanking", -85.0),
        ("soaring", 70.0),
        ("slowly soaring", 30.0),
        ("plateau", 0.0),
    ]
    .into_iter()
    .map(|(l, m)| (l.to_string(), m))
    .collect()
}
