//! Turns raw univariate series into labeled trend events.
//!
//! A series is normalized into a `[0, aspect] × [0, 1]` box so that angles
//! measured on it match how a reader perceives them on a chart of that
//! aspect ratio. Each tolerance in the configured set linearizes the series;
//! segments get slope and compound labels, adjacent segment pairs get shape
//! labels, and every series gets one maximum and one minimum event. After
//! labeling, only the highest-density share of each (kind, tolerance) pool
//! is kept.

pub mod rdp;

use std::cmp::Ordering;
use std::fmt;

use chrono::{Datelike, Duration, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::label_models::{argmax_label, argmax_shape, LabelModels};

const UNIX_EPOCH_CE_DAYS: i64 = 719_163;

/// Days since 1970-01-01.
pub fn day_number(date: NaiveDate) -> i64 {
    date.num_days_from_ce() as i64 - UNIX_EPOCH_CE_DAYS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub date: NaiveDate,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub chart_id: String,
    pub points: Vec<Observation>,
}

impl TimeSeries {
    /// Validates ≥ 2 finite points with strictly increasing dates.
    pub fn new(chart_id: impl Into<String>, points: Vec<Observation>) -> Result<Self> {
        let chart_id = chart_id.into();
        let invalid = |reason: String| Error::InvalidSeries {
            chart_id: chart_id.clone(),
            reason,
        };
        if points.len() < 2 {
            return Err(invalid(format!("needs at least 2 points, got {}", points.len())));
        }
        for w in points.windows(2) {
            if w[1].date <= w[0].date {
                return Err(invalid(format!(
                    "dates must be strictly increasing ({} then {})",
                    w[0].date, w[1].date
                )));
            }
        }
        if let Some(p) = points.iter().find(|p| !p.value.is_finite()) {
            return Err(invalid(format!("non-finite value on {}", p.date)));
        }
        Ok(TimeSeries { chart_id, points })
    }

    pub fn extents(&self) -> ChartExtents {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.value), hi.max(p.value))
            });
        ChartExtents {
            x_chart_min: self.points[0].date,
            x_chart_max: self.points[self.points.len() - 1].date,
            y_chart_min: lo,
            y_chart_max: hi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartExtents {
    pub x_chart_min: NaiveDate,
    pub x_chart_max: NaiveDate,
    pub y_chart_min: f64,
    pub y_chart_max: f64,
}

/// A series mapped into the `[0, aspect] × [0, 1]` perception box. Index `i`
/// of `xs`/`ys`/`dates` is index `i` of the source series.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub aspect: f64,
    pub dates: Vec<NaiveDate>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

pub fn normalize(series: &TimeSeries, aspect: f64) -> Result<NormalizedSeries> {
    let series = TimeSeries::new(series.chart_id.clone(), series.points.clone())?;
    let t0 = day_number(series.points[0].date) as f64;
    let t1 = day_number(series.points[series.points.len() - 1].date) as f64;
    let ext = series.extents();
    let range = ext.y_chart_max - ext.y_chart_min;
    let xs = series
        .points
        .iter()
        .map(|p| aspect * (day_number(p.date) as f64 - t0) / (t1 - t0))
        .collect();
    let ys = series
        .points
        .iter()
        .map(|p| {
            if range > 0.0 {
                (p.value - ext.y_chart_min) / range
            } else {
                0.0
            }
        })
        .collect();
    Ok(NormalizedSeries {
        aspect,
        dates: series.points.iter().map(|p| p.date).collect(),
        xs,
        ys,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSegment {
    pub start_idx: usize,
    pub end_idx: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Degrees, in (−90, 90).
    pub perceived_angle: f64,
    pub epsilon_level: f64,
}

/// Consecutive RDP segments of the normalized series.
pub fn linearize(norm: &NormalizedSeries, epsilon: f64) -> Vec<LinearSegment> {
    let kept = rdp::rdp_indices(&norm.xs, &norm.ys, epsilon);
    kept.windows(2)
        .map(|w| LinearSegment {
            start_idx: w[0],
            end_idx: w[1],
            start_date: norm.dates[w[0]],
            end_date: norm.dates[w[1]],
            perceived_angle: angle_between(norm, w[0], w[1]),
            epsilon_level: epsilon,
        })
        .collect()
}

fn angle_between(norm: &NormalizedSeries, a: usize, b: usize) -> f64 {
    let dx = norm.xs[b] - norm.xs[a];
    let dy = norm.ys[b] - norm.ys[a];
    dy.atan2(dx).to_degrees()
}

/// Perceived angle of a segment in degrees.
pub fn segment_angle(seg: &LinearSegment, norm: &NormalizedSeries) -> f64 {
    angle_between(norm, seg.start_idx, seg.end_idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    /// Angle at the shared vertex, [0, 180].
    pub interior_angle: f64,
    /// Direction the vertex points, clockwise from straight up, [0, 360).
    pub rotation: f64,
}

/// Interior angle and rotation of two adjacent segments.
///
/// The rotation is the direction of the interior-angle bisector flipped to
/// point out through the vertex, measured clockwise from +y: a symmetric
/// peak is 0°, a symmetric valley 180°. A straight continuation has no
/// bisector; its rotation is the left-hand normal of the travel direction
/// (0° for a flat line).
pub fn shape_params(
    first: &LinearSegment,
    second: &LinearSegment,
    norm: &NormalizedSeries,
) -> Result<ShapeParams> {
    if first.end_idx != second.start_idx {
        return Err(Error::NonAdjacentSegments {
            first_end: first.end_idx,
            second_start: second.start_idx,
        });
    }
    let v = (norm.xs[first.end_idx], norm.ys[first.end_idx]);
    let unit = |i: usize| {
        let (dx, dy) = (norm.xs[i] - v.0, norm.ys[i] - v.1);
        let len = dx.hypot(dy);
        (dx / len, dy / len)
    };
    let back = unit(first.start_idx);
    let fwd = unit(second.end_idx);
    let cos = (back.0 * fwd.0 + back.1 * fwd.1).clamp(-1.0, 1.0);
    let interior_angle = cos.acos().to_degrees();
    let (bx, by) = (-(back.0 + fwd.0), -(back.1 + fwd.1));
    let (ox, oy) = if bx.hypot(by) < 1e-12 {
        (-fwd.1, fwd.0)
    } else {
        (bx, by)
    };
    let mut rotation = ox.atan2(oy).to_degrees().rem_euclid(360.0);
    if rotation >= 360.0 {
        rotation = 0.0;
    }
    Ok(ShapeParams {
        interior_angle,
        rotation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Slope,
    Compound,
    Shape,
    Superlative,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Slope => "slope",
            EventKind::Compound => "compound",
            EventKind::Shape => "shape",
            EventKind::Superlative => "superlative",
        })
    }
}

/// A labeled time span of one chart: the searchable document.
///
/// `x_event_*` are day numbers (days since 1970-01-01) of the span ends; the
/// `y_event_*` values are in the series' own units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledEvent {
    pub chart_id: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub label: String,
    pub kind: EventKind,
    pub density: f64,
    pub saliency: f64,
    pub epsilon_level: Option<f64>,
    pub x_event_start: f64,
    pub x_event_end: f64,
    pub y_event_start: f64,
    pub y_event_end: f64,
    pub y_event_min: f64,
    pub y_event_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perceived_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<f64>,
}

/// L2 norm of the event's fractional time span and value span. Slope-like
/// events use the end-minus-start value change, shapes and superlatives the
/// max-minus-min range. A zero chart extent zeroes that component.
pub fn saliency(event: &LabeledEvent, extents: &ChartExtents) -> f64 {
    let x_range = (day_number(extents.x_chart_max) - day_number(extents.x_chart_min)) as f64;
    let y_range = extents.y_chart_max - extents.y_chart_min;
    let x = if x_range > 0.0 {
        (event.x_event_end - event.x_event_start) / x_range
    } else {
        0.0
    };
    let dy = match event.kind {
        EventKind::Slope | EventKind::Compound => event.y_event_end - event.y_event_start,
        EventKind::Shape | EventKind::Superlative => event.y_event_max - event.y_event_min,
    };
    let y = if y_range > 0.0 { dy / y_range } else { 0.0 };
    x.hypot(y)
}

fn span_event(
    series: &TimeSeries,
    start: usize,
    end: usize,
    label: &str,
    kind: EventKind,
    density: f64,
    epsilon: Option<f64>,
) -> LabeledEvent {
    let pts = &series.points[start..=end];
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.value), hi.max(p.value))
    });
    let mut ev = LabeledEvent {
        chart_id: series.chart_id.clone(),
        start_date: pts[0].date,
        end_date: pts[pts.len() - 1].date,
        label: label.to_string(),
        kind,
        density,
        saliency: 0.0,
        epsilon_level: epsilon,
        x_event_start: day_number(pts[0].date) as f64,
        x_event_end: day_number(pts[pts.len() - 1].date) as f64,
        y_event_start: pts[0].value,
        y_event_end: pts[pts.len() - 1].value,
        y_event_min: lo,
        y_event_max: hi,
        perceived_angle: None,
        shape_angle: None,
        rotation: None,
    };
    ev.saliency = saliency(&ev, &series.extents());
    ev
}

/// "maximum" and "minimum" events spanning ±`window_days` calendar days
/// around the global extremes, clamped to the series range. Ties go to the
/// earliest date.
pub fn superlative_events(series: &TimeSeries, window_days: i64) -> Vec<LabeledEvent> {
    let pts = &series.points;
    if pts.is_empty() {
        return Vec::new();
    }
    let mut imax = 0;
    let mut imin = 0;
    for (i, p) in pts.iter().enumerate() {
        if p.value > pts[imax].value {
            imax = i;
        }
        if p.value < pts[imin].value {
            imin = i;
        }
    }
    let first = pts[0].date;
    let last = pts[pts.len() - 1].date;
    let window = Duration::days(window_days);
    let mut out = Vec::with_capacity(2);
    for (label, idx) in [("maximum", imax), ("minimum", imin)] {
        let center = pts[idx].date;
        let start = (center - window).max(first);
        let end = (center + window).min(last);
        let inside: Vec<_> = pts
            .iter()
            .filter(|p| p.date >= start && p.date <= end)
            .collect();
        let (lo, hi) = inside
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.value), hi.max(p.value))
            });
        let mut ev = LabeledEvent {
            chart_id: series.chart_id.clone(),
            start_date: start,
            end_date: end,
            label: label.to_string(),
            kind: EventKind::Superlative,
            density: 0.0,
            saliency: 0.0,
            epsilon_level: None,
            x_event_start: day_number(start) as f64,
            x_event_end: day_number(end) as f64,
            y_event_start: inside[0].value,
            y_event_end: inside[inside.len() - 1].value,
            y_event_min: lo,
            y_event_max: hi,
            perceived_angle: None,
            shape_angle: None,
            rotation: None,
        };
        ev.saliency = saliency(&ev, &series.extents());
        out.push(ev);
    }
    out
}

/// The subset of [`Config`] the labeler uses.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelerConfig {
    pub aspect: f64,
    pub epsilons: Vec<f64>,
    pub keep: f64,
    pub superlative_window_days: i64,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        LabelerConfig::from(&Config::default())
    }
}

impl From<&Config> for LabelerConfig {
    fn from(c: &Config) -> Self {
        LabelerConfig {
            aspect: c.aspect,
            epsilons: c.epsilons.clone(),
            keep: c.keep,
            superlative_window_days: c.superlative_window_days,
        }
    }
}

/// Number of events kept out of `n` for a keep fraction.
pub fn kept_count(keep: f64, n: usize) -> usize {
    // The small offset keeps products like 0.7 * 10 = 7.000000000000001 at 7.
    let k = (keep * n as f64 - 1e-9).ceil();
    (k.max(0.0) as usize).min(n)
}

/// Unpruned candidate events for one chart.
fn chart_candidates(
    series: &TimeSeries,
    models: &LabelModels,
    cfg: &LabelerConfig,
) -> Result<Vec<LabeledEvent>> {
    let norm = normalize(series, cfg.aspect)?;
    let mut out = Vec::new();
    for &eps in &cfg.epsilons {
        let segments = linearize(&norm, eps);
        for seg in &segments {
            for (kind, family) in [
                (EventKind::Slope, &models.slope),
                (EventKind::Compound, &models.compound),
            ] {
                if let Some((label, density)) = argmax_label(family, seg.perceived_angle) {
                    let mut ev = span_event(
                        series,
                        seg.start_idx,
                        seg.end_idx,
                        label,
                        kind,
                        density,
                        Some(eps),
                    );
                    ev.perceived_angle = Some(seg.perceived_angle);
                    out.push(ev);
                }
            }
        }
        if models.shape.is_empty() {
            continue;
        }
        for pair in segments.windows(2) {
            let p = shape_params(&pair[0], &pair[1], &norm)?;
            if let Some((label, density)) = argmax_shape(&models.shape, p.interior_angle, p.rotation)
            {
                let mut ev = span_event(
                    series,
                    pair[0].start_idx,
                    pair[1].end_idx,
                    label,
                    EventKind::Shape,
                    density,
                    Some(eps),
                );
                ev.shape_angle = Some(p.interior_angle);
                ev.rotation = Some(p.rotation);
                out.push(ev);
            }
        }
    }
    Ok(out)
}

fn level_cmp(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Canonical output order: chart, kind, level, start date, then label.
pub fn event_order(a: &LabeledEvent, b: &LabeledEvent) -> Ordering {
    a.chart_id
        .cmp(&b.chart_id)
        .then(a.kind.cmp(&b.kind))
        .then(level_cmp(a.epsilon_level, b.epsilon_level))
        .then(a.start_date.cmp(&b.start_date))
        .then(a.end_date.cmp(&b.end_date))
        .then(a.label.cmp(&b.label))
}

/// Labels a whole corpus. Pruning to the top `keep` share by density runs per
/// (kind, tolerance) pool over all charts together; superlatives are never
/// pruned. Charts are processed in parallel and the output is sorted by
/// [`event_order`].
pub fn label_corpus(
    charts: &[TimeSeries],
    models: &LabelModels,
    cfg: &LabelerConfig,
) -> Result<Vec<LabeledEvent>> {
    let per_chart: Vec<Vec<LabeledEvent>> = charts
        .par_iter()
        .map(|s| chart_candidates(s, models, cfg))
        .collect::<Result<_>>()?;
    let mut pools: std::collections::BTreeMap<(EventKind, u64), Vec<LabeledEvent>> =
        Default::default();
    for ev in per_chart.into_iter().flatten() {
        let level = ev.epsilon_level.unwrap_or(0.0).to_bits();
        pools.entry((ev.kind, level)).or_default().push(ev);
    }
    let mut out = Vec::new();
    for (_, mut pool) in pools {
        pool.sort_by(|a, b| {
            b.density
                .total_cmp(&a.density)
                .then_with(|| event_order(a, b))
        });
        let k = kept_count(cfg.keep, pool.len());
        pool.truncate(k);
        out.extend(pool);
    }
    for s in charts {
        out.extend(superlative_events(s, cfg.superlative_window_days));
    }
    out.sort_by(event_order);
    Ok(out)
}

pub fn label_chart(
    series: &TimeSeries,
    models: &LabelModels,
    cfg: &LabelerConfig,
) -> Result<Vec<LabeledEvent>> {
    label_corpus(std::slice::from_ref(series), models, cfg)
}
