//! Reading and writing every on-disk format: series, company metadata and
//! label-study CSVs in; fitted models, labeled events and postings out.
//!
//! Output files are written to a temporary sibling and renamed into place,
//! so readers never see a partial file. The events file is JSON lines with a
//! header line carrying the format version and the fingerprint of the models
//! that produced the events.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::label_models::{LabelModels, LabelSample, ShapeSample};
use crate::query_parser::CompanyInfo;
use crate::search_core::Postings;
use crate::trend_labeler::{EventKind, LabeledEvent, Observation, TimeSeries};

/// Version of the events file layout.
pub const EVENTS_VERSION: u32 = 1;
/// Version of the models file layout.
pub const MODELS_VERSION: u32 = 1;

fn malformed(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

/// Deserializes every row; errors carry the 1-based file line.
fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(u64, T)>> {
    let mut reader = csv_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| malformed(path, 1, e.to_string()))?
        .clone();
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            malformed(path, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .deserialize(Some(&headers))
            .map_err(|e| malformed(path, line, e.to_string()))?;
        out.push((line, row));
    }
    if out.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct SeriesRow {
    date: NaiveDate,
    ticker: String,
    value: f64,
}

/// Reads a `date,ticker,value` CSV into one date-sorted series per ticker.
/// A repeated (ticker, date) pair is an error naming the repeated line.
pub fn load_series_csv(path: &Path) -> Result<BTreeMap<String, TimeSeries>> {
    let rows: Vec<(u64, SeriesRow)> = read_rows(path)?;
    let mut by_ticker: BTreeMap<String, BTreeMap<NaiveDate, (u64, f64)>> = BTreeMap::new();
    for (line, row) in rows {
        if !row.value.is_finite() {
            return Err(malformed(path, line, format!("non-finite value {}", row.value)));
        }
        let series = by_ticker.entry(row.ticker.clone()).or_default();
        if let Some((first, _)) = series.insert(row.date, (line, row.value)) {
            return Err(malformed(
                path,
                line,
                format!(
                    "duplicate observation for {} on {} (first seen on line {first})",
                    row.ticker, row.date
                ),
            ));
        }
    }
    by_ticker
        .into_iter()
        .map(|(ticker, points)| {
            let pts = points
                .into_iter()
                .map(|(date, (_, value))| Observation { date, value })
                .collect();
            Ok((ticker.clone(), TimeSeries::new(ticker, pts)?))
        })
        .collect()
}

#[derive(Deserialize)]
struct CompanyRow {
    ticker: String,
    company: String,
    #[serde(default)]
    aliases: String,
}

/// Reads `ticker,company,aliases` metadata; aliases are `;`-separated.
pub fn load_companies_csv(path: &Path) -> Result<Vec<CompanyInfo>> {
    let rows: Vec<(u64, CompanyRow)> = read_rows(path)?;
    Ok(rows
        .into_iter()
        .map(|(_, r)| CompanyInfo {
            ticker: r.ticker,
            company: r.company,
            aliases: r
                .aliases
                .split(';')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .map(String::from)
                .collect(),
        })
        .collect())
}

#[derive(Deserialize)]
struct SlopeRow {
    label: String,
    #[serde(default)]
    modifier: Option<String>,
    angle_deg: f64,
    #[serde(default)]
    anchor_angle_deg: Option<f64>,
    participant_id: String,
}

/// Reads a single-descriptor or modifier study CSV
/// (`label,modifier,angle_deg,anchor_angle_deg,participant_id`).
pub fn load_slope_labels_csv(path: &Path) -> Result<Vec<LabelSample>> {
    let rows: Vec<(u64, SlopeRow)> = read_rows(path)?;
    rows.into_iter()
        .map(|(line, r)| {
            let modifier = r.modifier.map(|m| m.to_lowercase()).filter(|m| !m.is_empty());
            if modifier.is_some() && r.anchor_angle_deg.is_none() {
                return Err(malformed(path, line, "modifier row without anchor_angle_deg"));
            }
            Ok(LabelSample {
                label: r.label.to_lowercase(),
                modifier,
                angle: r.angle_deg,
                participant: r.participant_id,
                anchor_angle: r.anchor_angle_deg,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct ShapeRow {
    label: String,
    shape_angle_deg: f64,
    rotation_deg: f64,
    participant_id: String,
}

/// Reads a shape study CSV (`label,shape_angle_deg,rotation_deg,participant_id`).
pub fn load_shape_labels_csv(path: &Path) -> Result<Vec<ShapeSample>> {
    let rows: Vec<(u64, ShapeRow)> = read_rows(path)?;
    Ok(rows
        .into_iter()
        .map(|(_, r)| ShapeSample {
            label: r.label.to_lowercase(),
            shape_angle: r.shape_angle_deg,
            rotation: r.rotation_deg,
            participant: r.participant_id,
        })
        .collect())
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp: PathBuf = path.to_path_buf();
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    tmp.set_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// First line of an events file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventsHeader {
    pub version: u32,
    pub created_at: String,
    pub model_fingerprint: String,
    pub event_count: usize,
}

/// Serializes events as JSON lines after a header line.
pub fn events_to_jsonl(events: &[LabeledEvent], header: &EventsHeader) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec(header)?;
    out.push(b'\n');
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn persist_events(path: &Path, events: &[LabeledEvent], model_fingerprint: &str) -> Result<()> {
    let header = EventsHeader {
        version: EVENTS_VERSION,
        created_at: chrono::Utc::now().to_rfc3339(),
        model_fingerprint: model_fingerprint.to_string(),
        event_count: events.len(),
    };
    write_atomic(path, &events_to_jsonl(events, &header)?)
}

pub fn load_events(path: &Path) -> Result<(EventsHeader, Vec<LabeledEvent>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => {
            return Err(Error::EmptyFile {
                path: path.to_path_buf(),
                message: "missing header line".into(),
            })
        }
    };
    let raw: serde_json::Value =
        serde_json::from_str(&first).map_err(|e| malformed(path, 1, e.to_string()))?;
    let version = raw.get("version").and_then(|v| v.as_u64());
    if version != Some(EVENTS_VERSION as u64) {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found: raw.get("version").map_or("none".into(), |v| v.to_string()),
            expected: EVENTS_VERSION,
            regenerate: "label",
        });
    }
    let header: EventsHeader =
        serde_json::from_value(raw).map_err(|e| malformed(path, 1, e.to_string()))?;
    let mut events = Vec::with_capacity(header.event_count);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ev = serde_json::from_str(&line).map_err(|e| malformed(path, i as u64 + 2, e.to_string()))?;
        events.push(ev);
    }
    if events.len() != header.event_count {
        return Err(malformed(
            path,
            0,
            format!(
                "header announces {} events but the file holds {}",
                header.event_count,
                events.len()
            ),
        ));
    }
    Ok((header, events))
}

/// Hash of an events file that ignores the header's creation time, so
/// identical inputs give identical hashes across runs.
pub fn determinism_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let split = bytes.iter().position(|&b| b == b'\n').unwrap_or(bytes.len());
    let mut header: serde_json::Value =
        serde_json::from_slice(&bytes[..split]).map_err(|e| malformed(path, 1, e.to_string()))?;
    if let Some(obj) = header.as_object_mut() {
        obj.remove("created_at");
    }
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&header)?);
    h.update(&bytes[split..]);
    Ok(hex::encode(h.finalize()))
}

#[derive(Serialize, Deserialize)]
struct ModelsFile {
    version: u32,
    fingerprint: String,
    models: LabelModels,
}

pub fn save_models(path: &Path, models: &LabelModels) -> Result<()> {
    let file = ModelsFile {
        version: MODELS_VERSION,
        fingerprint: models.fingerprint(),
        models: models.clone(),
    };
    write_atomic(path, &serde_json::to_vec(&file)?)
}

pub fn load_models(path: &Path) -> Result<LabelModels> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let raw: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| malformed(path, 0, e.to_string()))?;
    if raw.get("version").and_then(|v| v.as_u64()) != Some(MODELS_VERSION as u64) {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found: raw.get("version").map_or("none".into(), |v| v.to_string()),
            expected: MODELS_VERSION,
            regenerate: "fit-models",
        });
    }
    let file: ModelsFile =
        serde_json::from_value(raw).map_err(|e| malformed(path, 0, e.to_string()))?;
    if file.models.fingerprint() != file.fingerprint {
        return Err(malformed(path, 0, "model fingerprint does not match its content"));
    }
    Ok(file.models)
}

pub fn save_postings(path: &Path, postings: &Postings) -> Result<()> {
    write_atomic(path, &serde_json::to_vec(postings)?)
}

pub fn load_postings(path: &Path) -> Result<Postings> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| malformed(path, 0, e.to_string()))
}

/// Default postings sidecar next to an events file.
pub fn postings_path(events_path: &Path) -> PathBuf {
    let mut p = events_path.as_os_str().to_owned();
    p.push(".postings.json");
    PathBuf::from(p)
}

/// Everything the search engine serves.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub charts: BTreeMap<String, TimeSeries>,
    pub metadata: Vec<CompanyInfo>,
    pub events: Vec<LabeledEvent>,
    pub model_fingerprint: String,
}

impl Corpus {
    /// Checks that every event belongs to a known chart.
    pub fn new(
        charts: BTreeMap<String, TimeSeries>,
        metadata: Vec<CompanyInfo>,
        events: Vec<LabeledEvent>,
        model_fingerprint: String,
    ) -> Result<Self> {
        if let Some(e) = events.iter().find(|e| !charts.contains_key(&e.chart_id)) {
            return Err(Error::UnknownChart(e.chart_id.clone()));
        }
        Ok(Corpus {
            charts,
            metadata,
            events,
            model_fingerprint,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub charts: usize,
    pub observations: usize,
    pub events: usize,
    pub events_by_kind: BTreeMap<String, usize>,
    /// Tolerance level (as text) → events; superlatives are under `"none"`.
    pub events_by_level: BTreeMap<String, usize>,
    pub distinct_labels: usize,
    pub modifier_rows: usize,
    pub modifier_rows_retained: usize,
    pub retention_fraction: f64,
}

pub fn corpus_stats(
    charts: &BTreeMap<String, TimeSeries>,
    events: &[LabeledEvent],
    models: Option<&LabelModels>,
) -> CorpusStats {
    let mut by_kind = BTreeMap::new();
    let mut by_level = BTreeMap::new();
    let mut labels = std::collections::BTreeSet::new();
    for e in events {
        *by_kind.entry(e.kind.to_string()).or_insert(0) += 1;
        let level = e.epsilon_level.map_or("none".to_string(), |l| l.to_string());
        *by_level.entry(level).or_insert(0) += 1;
        labels.insert(e.label.as_str());
    }
    for k in [EventKind::Slope, EventKind::Compound, EventKind::Shape, EventKind::Superlative] {
        by_kind.entry(k.to_string()).or_insert(0);
    }
    let cleaning = models.map(|m| m.cleaning.clone()).unwrap_or_default();
    CorpusStats {
        charts: charts.len(),
        observations: charts.values().map(|s| s.points.len()).sum(),
        events: events.len(),
        events_by_kind: by_kind,
        events_by_level: by_level,
        distinct_labels: labels.len(),
        modifier_rows: cleaning.total,
        modifier_rows_retained: cleaning.retained,
        retention_fraction: cleaning.retention_fraction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn series_loading() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "s.csv",
            "date,ticker,value\n2015-01-03,A,3\n2015-01-01,A,1\n2015-01-02,A,2\n\
             2015-01-01,B,5\n2015-01-02,B,6\n2015-01-03,B,7\n",
        );
        let s = load_series_csv(&p).unwrap();
        assert_eq!(s.len(), 2);
        let a: Vec<f64> = s["A"].points.iter().map(|p| p.value).collect();
        assert_eq!(a, vec![1.0, 2.0, 3.0]);

        let dup = write(dir.path(), "d.csv", "date,ticker,value\n2015-01-01,A,1\n2015-01-02,A,2\n2015-01-01,A,3\n");
        match load_series_csv(&dup) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let bad = write(dir.path(), "b.csv", "date,ticker,value\n2015-01-01,A,1\n2015-13-01,A,2\n");
        match load_series_csv(&bad) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let empty = write(dir.path(), "e.csv", "");
        assert!(matches!(load_series_csv(&empty), Err(Error::EmptyFile { .. })));
        let header_only = write(dir.path(), "h.csv", "date,ticker,value\n");
        assert!(matches!(load_series_csv(&header_only), Err(Error::EmptyFile { .. })));
    }

    #[test]
    fn label_and_company_loading() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "l.csv",
            "label,modifier,angle_deg,anchor_angle_deg,participant_id\n\
             Rising,,30,,p1\nrising,slowly,15,30,p1\n",
        );
        let rows = load_slope_labels_csv(&p).unwrap();
        assert_eq!(rows[0].modifier, None);
        assert_eq!(rows[0].label, "rising");
        assert_eq!(rows[1].key(), "slowly rising");
        let bad = write(
            dir.path(),
            "lb.csv",
            "label,modifier,angle_deg,anchor_angle_deg,participant_id\nrising,slowly,15,,p1\n",
        );
        assert!(load_slope_labels_csv(&bad).is_err());
        let c = write(dir.path(), "c.csv", "ticker,company,aliases\nAAPL,Apple,apple inc; aapl\nX,Xco,\n");
        let cs = load_companies_csv(&c).unwrap();
        assert_eq!(cs[0].aliases, vec!["apple inc", "aapl"]);
        assert!(cs[1].aliases.is_empty());
        let s = write(dir.path(), "s.csv", "label,shape_angle_deg,rotation_deg,participant_id\npeak,90,0,p\n");
        assert_eq!(load_shape_labels_csv(&s).unwrap()[0].shape_angle, 90.0);
    }

    fn event() -> LabeledEvent {
        LabeledEvent {
            chart_id: "A".into(),
            start_date: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
            end_date: NaiveDate::from_ymd_opt(2015, 2, 1).unwrap(),
            label: "slowly rising".into(),
            kind: EventKind::Compound,
            density: 0.012345678901234567,
            saliency: 0.1 + 0.2,
            epsilon_level: Some(0.03),
            x_event_start: 16436.0,
            x_event_end: 16467.0,
            y_event_start: 1.0 / 3.0,
            y_event_end: 2.5,
            y_event_min: 1.0 / 3.0,
            y_event_max: 2.5,
            perceived_angle: Some(12.345),
            shape_angle: None,
            rotation: None,
        }
    }

    #[test]
    fn events_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("events.jsonl");
        persist_events(&p, &[event()], "abc").unwrap();
        let (h, evs) = load_events(&p).unwrap();
        assert_eq!(h.model_fingerprint, "abc");
        assert_eq!(evs, vec![event()]);

        persist_events(&p, &[], "abc").unwrap();
        assert!(load_events(&p).unwrap().1.is_empty());

        let stale = write(dir.path(), "old.jsonl", "{\"version\":0,\"created_at\":\"x\",\"model_fingerprint\":\"a\",\"event_count\":0}\n");
        let err = load_events(&stale).unwrap_err();
        assert!(matches!(err, Error::VersionMismatch { .. }));
        assert!(err.to_string().contains("trendsearch label"));
    }

    #[test]
    fn hash_ignores_timestamp() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        persist_events(&a, &[event()], "f").unwrap();
        std::thread::sleep(std::time::Duration::from_millis(5));
        persist_events(&b, &[event()], "f").unwrap();
        assert_eq!(determinism_hash(&a).unwrap(), determinism_hash(&b).unwrap());
        persist_events(&b, &[event(), event()], "f").unwrap();
        assert_ne!(determinism_hash(&a).unwrap(), determinism_hash(&b).unwrap());
    }

    #[test]
    fn models_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let mut m = LabelModels::default();
        m.slope.insert(
            "rising".into(),
            crate::label_models::Kde1D::new("rising", vec![30.1, 33.3], 5.0).unwrap(),
        );
        save_models(&p, &m).unwrap();
        let back = load_models(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.fingerprint(), m.fingerprint());
    }
}
