//! Tunable pipeline parameters, loadable from a TOML `key = value` file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Width-to-height ratio of the chart the labels are meant to be read on.
    pub aspect: f64,
    /// Linearization tolerances, one labeling resolution each.
    pub epsilons: Vec<f64>,
    /// Fraction of labels kept per kind and resolution after density ranking.
    pub keep: f64,
    pub slope_bandwidth: f64,
    pub scalar_bandwidth: f64,
    pub shape_bandwidth: f64,
    pub superlative_window_days: i64,
    pub max_gap_days: i64,
    pub fuzzy_threshold: f64,
    pub retrieval_cap: usize,
    /// Labels whose modal angle is within this many degrees of zero are "flat".
    pub flat_threshold_deg: f64,
    /// Minimum share of a narrower IQR covered by a wider one for a partial edge.
    pub partial_overlap: f64,
    pub page_size: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            aspect: 3.0,
            epsilons: vec![0.03, 0.1, 0.2],
            keep: 0.75,
            slope_bandwidth: 5.0,
            scalar_bandwidth: 0.1,
            shape_bandwidth: 15.0,
            superlative_window_days: 15,
            max_gap_days: 14,
            fuzzy_threshold: 0.5,
            retrieval_cap: 1000,
            flat_threshold_deg: 10.0,
            partial_overlap: 0.5,
            page_size: 20,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.aspect > 0.0) {
            return bad("aspect must be positive");
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return bad("epsilons must be a non-empty list of positive numbers");
        }
        if !(self.keep > 0.0 && self.keep <= 1.0) {
            return bad("keep must be in (0, 1]");
        }
        if !(self.slope_bandwidth > 0.0 && self.scalar_bandwidth > 0.0 && self.shape_bandwidth > 0.0)
        {
            return bad("bandwidths must be positive");
        }
        if self.superlative_window_days < 0 || self.max_gap_days < 0 {
            return bad("day windows must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.fuzzy_threshold) {
            return bad("fuzzy_threshold must be in [0, 1]");
        }
        if self.retrieval_cap == 0 || self.page_size == 0 {
            return bad("retrieval_cap and page_size must be positive");
        }
        if !(self.partial_overlap > 0.0 && self.partial_overlap <= 1.0) {
            return bad("partial_overlap must be in (0, 1]");
        }
        Ok(())
    }
}
