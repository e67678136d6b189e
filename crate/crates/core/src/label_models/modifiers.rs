use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kde::Kde1D;
use super::{Diagnostic, LabelSample};
use crate::error::Result;

/// Modifiers that must make a slope shallower (ratio ≤ 1).
pub const ATTENUATING: [&str; 2] = ["slowly", "gradually"];
/// Modifiers that must make a slope steeper (ratio ≥ 1).
pub const INTENSIFYING: [&str; 2] = ["quickly", "sharply"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifierScalarModel {
    pub modifier: String,
    pub scalar_samples: Vec<f64>,
    pub bandwidth: f64,
    pub peak_scalar: f64,
}

impl ModifierScalarModel {
    pub fn density(&self, scalar: f64) -> f64 {
        self.as_kde().density(scalar)
    }

    fn as_kde(&self) -> Kde1D {
        Kde1D {
            label: self.modifier.clone(),
            points: self.scalar_samples.clone(),
            bandwidth: self.bandwidth,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub retained: Vec<LabelSample>,
    pub total: usize,
    pub dropped_ratio: usize,
    pub dropped_zero_anchor: usize,
    pub retention_fraction: f64,
}

/// `angle / anchor` for a compound row, `None` when either side is missing
/// or the anchor is zero.
pub fn modifier_ratio(sample: &LabelSample) -> Option<f64> {
    match sample.anchor_angle {
        Some(anchor) if anchor != 0.0 => Some(sample.angle / anchor),
        _ => None,
    }
}

fn ratio_consistent(modifier: &str, ratio: f64) -> bool {
    if ATTENUATING.contains(&modifier) {
        ratio <= 1.0
    } else if INTENSIFYING.contains(&modifier) {
        ratio >= 1.0
    } else {
        true
    }
}

/// Applies the two cleaning rules to compound (modifier) rows: drop rows whose
/// modifier/anchor ratio contradicts the modifier's direction, and drop rows
/// anchored at 0°. Rows without a modifier are not compound rows and are
/// ignored entirely (neither retained nor counted).
pub fn clean_modifier_samples(samples: &[LabelSample]) -> CleaningReport {
    let mut report = CleaningReport::default();
    for s in samples {
        let Some(modifier) = s.modifier.as_deref() else {
            continue;
        };
        report.total += 1;
        match modifier_ratio(s) {
            None => report.dropped_zero_anchor += 1,
            Some(r) if !ratio_consistent(modifier, r) => report.dropped_ratio += 1,
            Some(_) => report.retained.push(s.clone()),
        }
    }
    report.retention_fraction = if report.total == 0 {
        0.0
    } else {
        report.retained.len() as f64 / report.total as f64
    };
    report
}

/// Per-modifier KDE over modifier/anchor ratios; the peak is searched on a
/// 0.001 grid over [0, 4]. The four known modifiers are expected; a missing
/// one yields a diagnostic instead of a model.
pub fn fit_modifier_scalars(
    retained: &[LabelSample],
    bandwidth: f64,
) -> Result<(BTreeMap<String, ModifierScalarModel>, Vec<Diagnostic>)> {
    let mut ratios: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in retained {
        if let (Some(m), Some(r)) = (s.modifier.as_deref(), modifier_ratio(s)) {
            ratios.entry(m.to_string()).or_default().push(r);
        }
    }
    let mut diagnostics = Vec::new();
    for m in ATTENUATING.iter().chain(INTENSIFYING.iter()) {
        if !ratios.contains_key(*m) {
            diagnostics.push(Diagnostic {
                row: 0,
                message: format!("modifier {m:?} has no retained samples; omitted"),
            });
        }
    }
    let mut models = BTreeMap::new();
    for (modifier, samples) in ratios {
        let kde = Kde1D::new(modifier.clone(), samples, bandwidth)?;
        let peak_scalar = scalar_peak(&kde);
        models.insert(
            modifier.clone(),
            ModifierScalarModel {
                modifier,
                scalar_samples: kde.points,
                bandwidth,
                peak_scalar,
            },
        );
    }
    Ok((models, diagnostics))
}

fn scalar_peak(kde: &Kde1D) -> f64 {
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..=4000usize {
        let d = kde.density(i as f64 / 1000.0);
        if d > best.1 {
            best = (i, d);
        }
    }
    best.0 as f64 / 1000.0
}
