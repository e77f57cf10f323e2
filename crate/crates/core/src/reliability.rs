//! Equal-width reliability binning and the four reliability-diagram metrics.
//!
//! Confidence mode bins instances by `max_k p_k` and tracks accuracy; uncertainty
//! mode bins by normalized entropy and tracks the misclassification rate. Bins
//! are `[lo, hi)` except the last, which is closed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::BinningConfig;
use crate::error::{Error, Result};
use crate::prediction::PredictionSet;
use crate::scores::{confidence, normalized_entropy};

/// Maximum area between a reliability curve and the diagonal used for scaling.
pub const MAX_ENCLOSED_AREA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinMode {
    Confidence,
    Uncertainty,
}

impl BinMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Confidence => "confidence",
            Self::Uncertainty => "uncertainty",
        }
    }
}

impl fmt::Display for BinMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean confidence or mean normalized entropy of the bin members.
    pub mean_measure: f64,
    /// Accuracy (confidence mode) or error rate (uncertainty mode).
    pub outcome_rate: f64,
    pub empty: bool,
}

impl BinStats {
    pub fn gap(&self) -> f64 {
        self.outcome_rate - self.mean_measure
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityCurve {
    pub mode: BinMode,
    pub bins: Vec<BinStats>,
    /// Third standardized moment of the instance-level measure, when defined.
    pub skewness: Option<f64>,
}

impl ReliabilityCurve {
    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn populated(&self) -> impl Iterator<Item = &BinStats> {
        self.bins.iter().filter(|b| !b.empty)
    }
}

/// Bin of `v` among `m` equal-width bins. Consistent with edges computed as
/// `i as f64 / m as f64`, with the last bin closed at 1.
pub fn bin_index(v: f64, m: usize) -> usize {
    let mf = m as f64;
    let mut idx = ((v * mf).floor().max(0.0) as usize).min(m - 1);
    while idx > 0 && v < idx as f64 / mf {
        idx -= 1;
    }
    while idx + 1 < m && v >= (idx + 1) as f64 / mf {
        idx += 1;
    }
    idx
}

fn build_curve(
    mode: BinMode,
    samples: impl Iterator<Item = (f64, bool)>,
    cfg: BinningConfig,
) -> ReliabilityCurve {
    let m = cfg.m_bins();
    let mut counts = vec![0usize; m];
    let mut measure_sums = vec![0.0; m];
    let mut hits = vec![0usize; m];
    let mut measures = Vec::new();
    for (v, hit) in samples {
        let b = bin_index(v, m);
        counts[b] += 1;
        measure_sums[b] += v;
        hits[b] += hit as usize;
        measures.push(v);
    }
    let bins = (0..m)
        .map(|b| {
            let count = counts[b];
            let (mean_measure, outcome_rate) = if count == 0 {
                (0.0, 0.0)
            } else {
                (
                    measure_sums[b] / count as f64,
                    hits[b] as f64 / count as f64,
                )
            };
            BinStats {
                lo: b as f64 / m as f64,
                hi: (b + 1) as f64 / m as f64,
                count,
                mean_measure,
                outcome_rate,
                empty: count == 0,
            }
        })
        .collect();
    ReliabilityCurve {
        mode,
        bins,
        skewness: skewness(&measures).ok(),
    }
}

/// Confidence-mode curve over all instances.
pub fn bin_confidence(set: &PredictionSet, cfg: BinningConfig) -> ReliabilityCurve {
    bin_confidence_subset(set, 0..set.n(), cfg)
}

/// Confidence-mode curve over the given instances.
pub fn bin_confidence_subset(
    set: &PredictionSet,
    indices: impl IntoIterator<Item = usize>,
    cfg: BinningConfig,
) -> ReliabilityCurve {
    let samples = indices
        .into_iter()
        .map(|i| (confidence(set.row(i)), set.is_correct(i)));
    build_curve(BinMode::Confidence, samples, cfg)
}

/// Uncertainty-mode curve over all instances.
pub fn bin_uncertainty(set: &PredictionSet, cfg: BinningConfig) -> ReliabilityCurve {
    bin_uncertainty_subset(set, 0..set.n(), cfg)
}

pub fn bin_uncertainty_subset(
    set: &PredictionSet,
    indices: impl IntoIterator<Item = usize>,
    cfg: BinningConfig,
) -> ReliabilityCurve {
    let samples = indices
        .into_iter()
        .map(|i| (normalized_entropy(set.row(i)), !set.is_correct(i)));
    build_curve(BinMode::Uncertainty, samples, cfg)
}

fn weighted_gap(curve: &ReliabilityCurve) -> f64 {
    let n = curve.total_count() as f64;
    curve
        .populated()
        .map(|b| b.count as f64 / n * (b.outcome_rate - b.mean_measure).abs())
        .sum()
}

fn expect_mode(curve: &ReliabilityCurve, mode: BinMode) -> Result<()> {
    if curve.mode != mode {
        return Err(Error::WrongMode {
            expected: mode.as_str(),
            found: curve.mode.as_str(),
        });
    }
    Ok(())
}

/// Expected calibration error of a confidence-mode curve.
pub fn ece(curve: &ReliabilityCurve) -> Result<f64> {
    expect_mode(curve, BinMode::Confidence)?;
    Ok(weighted_gap(curve))
}

/// Uncertainty calibration error of an uncertainty-mode curve.
pub fn uce(curve: &ReliabilityCurve) -> Result<f64> {
    expect_mode(curve, BinMode::Uncertainty)?;
    Ok(weighted_gap(curve))
}

/// Integral of `|y(x) - x|` over a polyline, split at diagonal crossings so
/// every piece is integrated exactly by the trapezoid rule.
fn area_to_diagonal(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let width = x1 - x0;
            let (d0, d1) = (y0 - x0, y1 - x1);
            if d0 * d1 >= 0.0 {
                width * (d0.abs() + d1.abs()) / 2.0
            } else {
                width * (d0 * d0 + d1 * d1) / (2.0 * (d0.abs() + d1.abs()))
            }
        })
        .sum()
}

/// Reliability polyline: populated bin points anchored at (0,0) and (1,1).
pub fn reliability_polyline(curve: &ReliabilityCurve) -> Vec<(f64, f64)> {
    let mut points = vec![(0.0, 0.0)];
    points.extend(curve.populated().map(|b| (b.mean_measure, b.outcome_rate)));
    points.push((1.0, 1.0));
    points
}

/// Area enclosed between the reliability polyline and the diagonal.
pub fn enclosed_area(curve: &ReliabilityCurve) -> Result<f64> {
    if curve.populated().next().is_none() {
        return Err(Error::NoData);
    }
    Ok(area_to_diagonal(&reliability_polyline(curve)))
}

/// `1 - A / 0.25`, clamped to `[0, 1]`. This is the CCQS for a confidence
/// curve and the UCQS for an uncertainty curve.
pub fn calibration_quality_score(curve: &ReliabilityCurve) -> Result<f64> {
    let area = enclosed_area(curve)?;
    Ok((1.0 - area / MAX_ENCLOSED_AREA).clamp(0.0, 1.0))
}

/// Third standardized moment `m3 / m2^1.5` with population central moments.
pub fn skewness(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::DegenerateDistribution);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m2 <= (16.0 * f64::EPSILON * scale).powi(2) {
        return Err(Error::DegenerateDistribution);
    }
    Ok(m3 / m2.powf(1.5))
}
