//! Per-instance uncertainty and confidence measures, plus the NLL and Brier
//! proper scores. Logarithms are natural throughout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prediction::{PredictionSet, PROB_FLOOR};

/// Shannon entropy of `p` divided by `ln K`, so a uniform row scores 1.
/// Zero entries contribute nothing (`0 ln 0 = 0`).
pub fn normalized_entropy(p: &[f64]) -> f64 {
    entropy_nats(p) / (p.len() as f64).ln()
}

/// Unnormalized Shannon entropy in nats.
pub fn entropy_nats(p: &[f64]) -> f64 {
    let h: f64 = p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln())
        .sum();
    h.max(0.0)
}

/// `1 - max_k p_k`.
pub fn variation_ratio(p: &[f64]) -> f64 {
    1.0 - confidence(p)
}

pub fn confidence(p: &[f64]) -> f64 {
    p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `-ln p_label`, with the probability floored at [`PROB_FLOOR`].
pub fn cross_entropy_instance(p: &[f64], label: usize) -> f64 {
    -p[label].clamp(PROB_FLOOR, 1.0).ln()
}

pub fn brier_instance(p: &[f64], label: usize) -> f64 {
    p.iter()
        .enumerate()
        .map(|(k, &v)| {
            let target = if k == label { 1.0 } else { 0.0 };
            (v - target) * (v - target)
        })
        .sum()
}

/// Mean cross-entropy of the labels.
pub fn nll(set: &PredictionSet) -> f64 {
    mean(score_all(set, ScoreKind::CrossEntropy).values())
}

/// Mean multi-class Brier score, in `[0, 2]`.
pub fn brier(set: &PredictionSet) -> f64 {
    let total: f64 = set
        .rows()
        .zip(set.labels())
        .map(|(p, &y)| brier_instance(p, y))
        .sum();
    total / set.n() as f64
}

/// Sequential sum so results do not depend on thread scheduling.
pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Entropy,
    VariationRatio,
    CrossEntropy,
    Confidence,
}

impl ScoreKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Entropy => "entropy",
            Self::VariationRatio => "variation_ratio",
            Self::CrossEntropy => "cross_entropy",
            Self::Confidence => "confidence",
        }
    }

    pub fn score(&self, p: &[f64], label: usize) -> f64 {
        match self {
            Self::Entropy => normalized_entropy(p),
            Self::VariationRatio => variation_ratio(p),
            Self::CrossEntropy => cross_entropy_instance(p, label),
            Self::Confidence => confidence(p),
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" => Ok(Self::Entropy),
            "variation_ratio" | "vr" => Ok(Self::VariationRatio),
            "cross_entropy" | "ce" => Ok(Self::CrossEntropy),
            "confidence" => Ok(Self::Confidence),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// One score per instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub kind: ScoreKind,
    values: Vec<f64>,
}

impl ScoreVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub fn score_all(set: &PredictionSet, kind: ScoreKind) -> ScoreVector {
    let values = set
        .rows()
        .zip(set.labels())
        .map(|(p, &y)| kind.score(p, y))
        .collect();
    ScoreVector { kind, values }
}

/// String-dispatched variant of [`score_all`].
pub fn score_all_named(set: &PredictionSet, kind: &str) -> Result<ScoreVector> {
    Ok(score_all(set, kind.parse()?))
}
