use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Diagnostic, LabelSample};
use crate::error::{Error, Result};

/// Standard normal density.
#[inline]
pub(crate) fn std_normal(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// One-dimensional Gaussian KDE over angles (or any scalar), normalized over
/// its own sample count so that it integrates to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde1D {
    pub label: String,
    pub points: Vec<f64>,
    pub bandwidth: f64,
}

impl Kde1D {
    pub fn new(label: impl Into<String>, points: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::InvalidBandwidth(bandwidth));
        }
        if points.is_empty() {
            return Err(Error::EmptySamples);
        }
        Ok(Kde1D {
            label: label.into(),
            points,
            bandwidth,
        })
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let sum: f64 = self.points.iter().map(|p| std_normal((x - p) / h)).sum();
        sum / (self.points.len() as f64 * h)
    }

    /// Argmax of the density over `lo..=hi` sampled every `step`; the first
    /// (lowest) grid point wins ties.
    pub fn grid_mode(&self, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as i64;
        let mut best = (lo, f64::NEG_INFINITY);
        for i in 0..=n {
            let x = lo + i as f64 * step;
            let d = self.density(x);
            if d > best.1 {
                best = (x, d);
            }
        }
        best.0
    }
}

/// Result of fitting one KDE per label key.
#[derive(Debug, Clone, Default)]
pub struct SlopeFit {
    pub models: BTreeMap<String, Kde1D>,
    pub rejected: Vec<Diagnostic>,
}

/// Fits one [`Kde1D`] per label key (`"<modifier> <label>"` for compound rows).
/// Rows with an angle outside [-90, 90] are skipped and reported.
pub fn fit_slope_kdes(samples: &[LabelSample], bandwidth: f64) -> Result<SlopeFit> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidBandwidth(bandwidth));
    }
    let mut grouped: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut rejected = Vec::new();
    for (row, s) in samples.iter().enumerate() {
        if !(-90.0..=90.0).contains(&s.angle) {
            rejected.push(Diagnostic {
                row,
                message: format!("angle {} outside [-90, 90] for label {:?}", s.angle, s.key()),
            });
            continue;
        }
        grouped.entry(s.key()).or_default().push(s.angle);
    }
    if grouped.is_empty() {
        return Err(Error::EmptySamples);
    }
    let models = grouped
        .into_iter()
        .map(|(label, points)| {
            let kde = Kde1D::new(label.clone(), points, bandwidth)?;
            Ok((label, kde))
        })
        .collect::<Result<_>>()?;
    Ok(SlopeFit { models, rejected })
}

/// Label whose density is highest at `angle`. Iteration is in label order and
/// only a strictly larger density replaces the incumbent, so ties resolve to
/// the lexicographically smallest label.
pub fn argmax_label(models: &BTreeMap<String, Kde1D>, angle: f64) -> Option<(&str, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for (label, model) in models {
        let d = model.density(angle);
        match best {
            Some((_, bd)) if d <= bd => {}
            _ => best = Some((label.as_str(), d)),
        }
    }
    best
}
