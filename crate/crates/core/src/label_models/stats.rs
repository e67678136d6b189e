use serde::{Deserialize, Serialize};

use super::kde::Kde1D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub label: String,
    /// Angle of peak density; may fall outside the IQR.
    pub mode: f64,
    pub median: f64,
    pub iqr_low: f64,
    pub iqr_high: f64,
}

impl LabelStats {
    pub fn iqr_width(&self) -> f64 {
        self.iqr_high - self.iqr_low
    }
}

/// Percentile of already-sorted data with linear interpolation between the
/// closest ranks (`pos = p · (n − 1)`).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Mode on a 0.1° grid over [-90, 90]; quartiles from the raw samples.
pub fn label_stats(model: &Kde1D) -> LabelStats {
    let mut best = (0i32, f64::NEG_INFINITY);
    for i in -900..=900 {
        let d = model.density(i as f64 / 10.0);
        if d > best.1 {
            best = (i, d);
        }
    }
    let mut sorted = model.points.clone();
    sorted.sort_by(f64::total_cmp);
    LabelStats {
        label: model.label.clone(),
        mode: best.0 as f64 / 10.0,
        median: percentile(&sorted, 0.5),
        iqr_low: percentile(&sorted, 0.25),
        iqr_high: percentile(&sorted, 0.75),
    }
}
