//! Quantified trend semantics: per-label Gaussian KDEs over perceived slope
//! angles (single descriptors and modifier compounds), periodic 2D KDEs over
//! two-segment shapes, modifier scalar analysis and per-label angle stats.
//!
//! Fitted models are plain immutable data and can be shared across threads.

mod kde;
mod modifiers;
mod shape;
mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use kde::{argmax_label, fit_slope_kdes, Kde1D, SlopeFit};
pub use modifiers::{
    clean_modifier_samples, fit_modifier_scalars, modifier_ratio, CleaningReport,
    ModifierScalarModel, ATTENUATING, INTENSIFYING,
};
pub use shape::{argmax_shape, fit_shape_kdes, KdePeriodic2D};
pub use stats::{label_stats, percentile, LabelStats};

use crate::config::Config;
use crate::error::Result;

/// One crowdsourced slope annotation. Compound rows carry the modifier and
/// the participant's anchor angle for the bare descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSample {
    pub label: String,
    pub modifier: Option<String>,
    pub angle: f64,
    pub participant: String,
    pub anchor_angle: Option<f64>,
}

impl LabelSample {
    /// Model key: the bare label, or `"<modifier> <label>"`.
    pub fn key(&self) -> String {
        match &self.modifier {
            Some(m) => format!("{m} {}", self.label),
            None => self.label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSample {
    pub label: String,
    pub shape_angle: f64,
    pub rotation: f64,
    pub participant: String,
}

/// A skipped input row and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub row: usize,
    pub message: String,
}

/// Every fitted model the labeler and search need.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelModels {
    pub slope: BTreeMap<String, Kde1D>,
    pub compound: BTreeMap<String, Kde1D>,
    pub shape: BTreeMap<String, KdePeriodic2D>,
    pub modifiers: BTreeMap<String, ModifierScalarModel>,
    pub cleaning: CleaningSummary,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningSummary {
    pub total: usize,
    pub retained: usize,
    pub dropped_ratio: usize,
    pub dropped_zero_anchor: usize,
    pub retention_fraction: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FitReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl LabelModels {
    /// Fits all model families. Single-descriptor rows become slope models;
    /// compound rows are cleaned first and then fitted as their own labels.
    pub fn fit(
        slope_samples: &[LabelSample],
        shape_samples: &[ShapeSample],
        config: &Config,
    ) -> Result<(Self, FitReport)> {
        let mut report = FitReport::default();
        let (compound_rows, single_rows): (Vec<_>, Vec<_>) = slope_samples
            .iter()
            .cloned()
            .partition(|s| s.modifier.is_some());

        let mut models = LabelModels::default();
        if !single_rows.is_empty() {
            let fit = fit_slope_kdes(&single_rows, config.slope_bandwidth)?;
            report.diagnostics.extend(fit.rejected);
            models.slope = fit.models;
        }
        if !compound_rows.is_empty() {
            let cleaning = clean_modifier_samples(&compound_rows);
            models.cleaning = CleaningSummary {
                total: cleaning.total,
                retained: cleaning.retained.len(),
                dropped_ratio: cleaning.dropped_ratio,
                dropped_zero_anchor: cleaning.dropped_zero_anchor,
                retention_fraction: cleaning.retention_fraction,
            };
            if !cleaning.retained.is_empty() {
                let fit = fit_slope_kdes(&cleaning.retained, config.slope_bandwidth)?;
                report.diagnostics.extend(fit.rejected);
                models.compound = fit.models;
                let (scalars, diags) =
                    fit_modifier_scalars(&cleaning.retained, config.scalar_bandwidth)?;
                report.diagnostics.extend(diags);
                models.modifiers = scalars;
            }
        }
        if !shape_samples.is_empty() {
            models.shape = fit_shape_kdes(shape_samples, config.shape_bandwidth)?;
        }
        if models.slope.is_empty() && models.compound.is_empty() && models.shape.is_empty() {
            return Err(crate::Error::EmptySamples);
        }
        Ok((models, report))
    }

    /// Angle statistics for every slope and compound label.
    pub fn stats(&self) -> BTreeMap<String, LabelStats> {
        self.slope
            .values()
            .chain(self.compound.values())
            .map(|m| (m.label.clone(), label_stats(m)))
            .collect()
    }

    /// Content hash of the models (hex SHA-256 of their canonical JSON).
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("models serialize");
        hex::encode(Sha256::digest(&json))
    }

    /// Every slope, compound and shape label known to the models.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.slope
            .keys()
            .chain(self.compound.keys())
            .chain(self.shape.keys())
            .map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(label: &str, modifier: Option<&str>, angle: f64, anchor: Option<f64>) -> LabelSample {
        LabelSample {
            label: label.into(),
            modifier: modifier.map(Into::into),
            angle,
            participant: "p".into(),
            anchor_angle: anchor,
        }
    }

    #[test]
    fn fit_splits_families_and_cleans_compounds() {
        let rows = vec![
            s("falling", None, -40.0, None),
            s("falling", Some("sharply"), -70.0, Some(-40.0)),
            s("falling", Some("slowly"), -60.0, Some(-40.0)),
        ];
        let shapes = vec![ShapeSample {
            label: "peak".into(),
            shape_angle: 60.0,
            rotation: 0.0,
            participant: "p".into(),
        }];
        let (m, _) = LabelModels::fit(&rows, &shapes, &Config::default()).unwrap();
        assert_eq!(m.slope.keys().collect::<Vec<_>>(), vec!["falling"]);
        assert_eq!(m.compound.keys().collect::<Vec<_>>(), vec!["sharply falling"]);
        assert_eq!(m.cleaning.total, 2);
        assert_eq!(m.cleaning.retained, 1);
        assert_eq!(m.shape.len(), 1);
        assert_eq!(m.stats().len(), 2);
        assert_eq!(m.fingerprint().len(), 64);
        assert_eq!(m.fingerprint(), m.clone().fingerprint());
    }
}
