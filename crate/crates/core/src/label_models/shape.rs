use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ShapeSample;
use crate::error::{Error, Result};

const FULL_TURN: f64 = 360.0;

/// Two-dimensional Gaussian KDE over (interior angle, rotation) with the
/// rotation axis wrapped at 0°/360°.
///
/// Every sample also contributes through virtual copies shifted by ±360° on
/// the rotation axis, which is the same as evaluating the plain KDE at the
/// query and at its ±360° virtual query points and summing. Copies further
/// than [`KdePeriodic2D::wrap_overlap`] from the seam contribute less than the
/// 3-sigma tail, but they are kept so the density is exactly periodic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdePeriodic2D {
    pub label: String,
    /// (interior angle, rotation) pairs in degrees.
    pub points: Vec<(f64, f64)>,
    pub bandwidth: f64,
}

fn check_shape_angle(v: f64) -> Result<()> {
    if (0.0..=180.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "shape angle",
            value: v,
            min: 0.0,
            max: 180.0,
        })
    }
}

fn check_rotation(v: f64) -> Result<()> {
    if (0.0..FULL_TURN).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "rotation",
            value: v,
            min: 0.0,
            max: FULL_TURN,
        })
    }
}

impl KdePeriodic2D {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::InvalidBandwidth(bandwidth));
        }
        if points.is_empty() {
            return Err(Error::EmptySamples);
        }
        for &(a, r) in &points {
            check_shape_angle(a)?;
            check_rotation(r)?;
        }
        Ok(KdePeriodic2D {
            label: label.into(),
            points,
            bandwidth,
        })
    }

    /// Seam overlap band (three bandwidths).
    pub fn wrap_overlap(&self) -> f64 {
        3.0 * self.bandwidth
    }

    pub fn density(&self, shape_angle: f64, rotation: f64) -> Result<f64> {
        check_shape_angle(shape_angle)?;
        check_rotation(rotation)?;
        Ok(self.density_unchecked(shape_angle, rotation))
    }

    pub(crate) fn density_unchecked(&self, shape_angle: f64, rotation: f64) -> f64 {
        let h = self.bandwidth;
        let inv2h2 = 0.5 / (h * h);
        let mut sum = 0.0;
        for &(a, r) in &self.points {
            let da = shape_angle - a;
            let ea = (-da * da * inv2h2).exp();
            if ea == 0.0 {
                continue;
            }
            let dr = rotation - r;
            let er = (-dr * dr * inv2h2).exp()
                + (-(dr - FULL_TURN) * (dr - FULL_TURN) * inv2h2).exp()
                + (-(dr + FULL_TURN) * (dr + FULL_TURN) * inv2h2).exp();
            sum += ea * er;
        }
        sum / (self.points.len() as f64 * 2.0 * PI * h * h)
    }
}

pub fn fit_shape_kdes(
    samples: &[ShapeSample],
    bandwidth: f64,
) -> Result<BTreeMap<String, KdePeriodic2D>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut grouped: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for s in samples {
        check_shape_angle(s.shape_angle)?;
        check_rotation(s.rotation)?;
        grouped
            .entry(s.label.clone())
            .or_default()
            .push((s.shape_angle, s.rotation));
    }
    grouped
        .into_iter()
        .map(|(label, pts)| Ok((label.clone(), KdePeriodic2D::new(label, pts, bandwidth)?)))
        .collect()
}

/// 2D analogue of [`super::argmax_label`], same tie rule.
pub fn argmax_shape(
    models: &BTreeMap<String, KdePeriodic2D>,
    shape_angle: f64,
    rotation: f64,
) -> Option<(&str, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for (label, m) in models {
        let d = m.density_unchecked(shape_angle, rotation);
        match best {
            Some((_, bd)) if d <= bd => {}
            _ => best = Some((label.as_str(), d)),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(a: f64, r: f64) -> KdePeriodic2D {
        KdePeriodic2D::new("x", vec![(a, r)], 15.0).unwrap()
    }

    #[test]
    fn wraps_across_the_seam() {
        let m = one(90.0, 355.0);
        let h: f64 = 15.0;
        let expected = (-0.5 * (8.0 / h).powi(2)).exp() / (2.0 * PI * h * h);
        let got = m.density(90.0, 3.0).unwrap();
        // The 352° path contributes only e^{-275}, far below f64 resolution here.
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        assert_eq!(m.wrap_overlap(), 45.0);
    }

    #[test]
    fn seam_is_continuous() {
        for &(a, r) in &[(90.0, 355.0), (10.0, 2.0), (170.0, 100.0), (45.0, 200.0), (60.0, 46.0)] {
            let m = one(a, r);
            for sa in [0.0, 37.5, 90.0, 180.0] {
                let lo = m.density(sa, 1e-6).unwrap();
                let hi = m.density(sa, 360.0 - 1e-6).unwrap();
                assert!((lo - hi).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_sample_peaks_at_itself() {
        let m = one(90.0, 180.0);
        let peak = m.density(90.0, 180.0).unwrap();
        for (da, dr) in [(0.1, 0.0), (-0.1, 0.0), (0.0, 0.1), (0.0, -0.1), (5.0, 5.0)] {
            assert!(m.density(90.0 + da, 180.0 + dr).unwrap() < peak);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let m = one(90.0, 180.0);
        assert!(m.density(181.0, 0.0).is_err());
        assert!(m.density(10.0, 360.0).is_err());
        assert!(m.density(10.0, -1.0).is_err());
        let bad = ShapeSample {
            label: "x".into(),
            shape_angle: 10.0,
            rotation: 400.0,
            participant: "p".into(),
        };
        assert!(fit_shape_kdes(&[bad], 15.0).is_err());
    }
}
