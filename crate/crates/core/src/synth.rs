//! Seeded synthetic prediction sets.
//!
//! Random numbers come from xoshiro256++ seeded through SplitMix64
//! ([`PRNG_ID`]). Uniforms take the top 53 bits of each output, normals use
//! the cosine branch of Box-Muller, and categorical draws invert the CDF. Given
//! that recipe the fixtures can be regenerated bit-for-bit elsewhere.
//!
//! Calibrated sets draw Gaussian logits with standard deviation
//! `1 / concentration`, so large concentrations give near-uniform rows, and
//! sample each label from its own row. Distortion multiplies the logits after
//! the labels are drawn.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prediction::{softmax_into, Matrix, PredictionSet, RawPredictions};
use crate::reliability::bin_index;
use crate::scores::confidence;
use crate::temper::scale_logits;

pub const PRNG_ID: &str = "xoshiro256++/splitmix64";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub k: usize,
    pub concentration: f64,
    pub distortion: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n: usize, k: usize, concentration: f64, seed: u64) -> Self {
        Self {
            n,
            k,
            concentration,
            distortion: 1.0,
            seed,
        }
    }

    pub fn with_distortion(self, distortion: f64) -> Self {
        Self { distortion, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "synthetic sets need n >= 1 and k >= 2, got n={} k={}",
                self.n, self.k
            )));
        }
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "concentration must be positive, got {}",
                self.concentration
            )));
        }
        if !(self.distortion > 0.0 && self.distortion.is_finite()) {
            return Err(Error::NonPositiveFactor(self.distortion));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkewTarget {
    HighConfidence,
    HighUncertainty,
}

/// The generator's random stream.
pub struct Stream(Xoshiro256PlusPlus);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Index drawn from a discrete distribution `p`.
    pub fn categorical(&mut self, p: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, &v) in p.iter().enumerate() {
            acc += v;
            if u < acc {
                return i;
            }
        }
        // Rounding left the cumulative sum short of u: take the last class
        // with mass.
        p.iter().rposition(|&v| v > 0.0).unwrap_or(p.len() - 1)
    }
}

fn assemble(k: usize, logits: Vec<f64>, labels: Vec<usize>) -> Result<PredictionSet> {
    let n = labels.len();
    PredictionSet::validate(RawPredictions::from_logits(
        Matrix::new(n, k, logits)?,
        labels.into_iter().map(|l| l as i64).collect(),
    ))
}

/// Calibrated set with `cfg.distortion` applied afterwards.
pub fn generate(cfg: &SynthConfig) -> Result<PredictionSet> {
    cfg.validate()?;
    let (n, k) = (cfg.n, cfg.k);
    let sd = 1.0 / cfg.concentration;
    let mut rng = Stream::new(cfg.seed);
    let mut logits = vec![0.0; n * k];
    let mut labels = Vec::with_capacity(n);
    let mut p = vec![0.0; k];
    for row in logits.chunks_exact_mut(k) {
        for l in row.iter_mut() {
            *l = sd * rng.normal();
        }
        softmax_into(row, &mut p);
        labels.push(rng.categorical(&p));
    }
    let set = assemble(k, logits, labels)?;
    if cfg.distortion == 1.0 {
        Ok(set)
    } else {
        distort(&set, cfg.distortion)
    }
}

/// Calibrated by construction: every label is drawn from its own row.
pub fn gen_calibrated(cfg: &SynthConfig) -> Result<PredictionSet> {
    if cfg.distortion != 1.0 {
        return Err(Error::InvalidConfig(
            "calibrated generation requires distortion = 1".into(),
        ));
    }
    generate(cfg)
}

/// Multiplies logits by `g`, leaving labels and argmax untouched.
pub fn distort(set: &PredictionSet, g: f64) -> Result<PredictionSet> {
    scale_logits(set, g)
}

/// Accuracy offset added to the confidence of bin `b` (of ten) when drawing
/// labels for skewed sets. Alternating signs give uneven reliability gaps.
fn skew_offset(b: usize) -> f64 {
    if b == 9 {
        -0.03
    } else {
        0.12 * (1.3 * b as f64).cos()
    }
}

/// Set whose confidence (or entropy) mass sits in an extreme bin.
///
/// `HighConfidence` boosts one random class per row by a margin that is large
/// for most rows and uniform on `[0, 4)` for a 15% tail, so confidences pile
/// up in `[0.9, 1]` with a long left tail. `HighUncertainty` uses small logits
/// so normalized entropies pile up in `[0.9, 1]`. Labels are correct with
/// probability `confidence + offset(bin)`, otherwise drawn from the remaining
/// classes in proportion to their probability.
pub fn gen_skewed(cfg: &SynthConfig, target: SkewTarget) -> Result<PredictionSet> {
    cfg.validate()?;
    let (n, k) = (cfg.n, cfg.k);
    let sd = (1.0 / cfg.concentration).min(1.0);
    let mut rng = Stream::new(cfg.seed);
    let mut logits = vec![0.0; n * k];
    let mut labels = Vec::with_capacity(n);
    let mut p = vec![0.0; k];
    let boost_floor = 2.0 + (k as f64 - 1.0).ln() + 2.0 * sd;
    for row in logits.chunks_exact_mut(k) {
        match target {
            SkewTarget::HighConfidence => {
                for l in row.iter_mut() {
                    *l = sd * rng.normal();
                }
                let dominant = (rng.uniform() * k as f64) as usize % k;
                let margin = if rng.uniform() < 0.15 {
                    4.0 * rng.uniform()
                } else {
                    boost_floor - 2.0 * (1.0 - rng.uniform()).ln()
                };
                row[dominant] += margin;
            }
            SkewTarget::HighUncertainty => {
                for l in row.iter_mut() {
                    *l = 0.3 * sd * rng.normal();
                }
            }
        }
        softmax_into(row, &mut p);
        let conf = confidence(&p);
        let top = crate::prediction::argmax(&p);
        let accuracy = (conf + skew_offset(bin_index(conf, 10))).clamp(0.0, 1.0);
        let label = if rng.uniform() < accuracy {
            top
        } else {
            let mut rest = p.clone();
            rest[top] = 0.0;
            let mass: f64 = rest.iter().sum();
            if mass > 0.0 {
                rest.iter_mut().for_each(|v| *v /= mass);
                rng.categorical(&rest)
            } else {
                (top + 1 + (rng.uniform() * (k - 1) as f64) as usize % (k - 1)) % k
            }
        };
        labels.push(label);
    }
    let set = assemble(k, logits, labels)?;
    if cfg.distortion == 1.0 {
        Ok(set)
    } else {
        distort(&set, cfg.distortion)
    }
}

/// Row-wise mixture `(1 - w) * from + w * toward` of probabilities, labelled
/// with `toward`'s labels.
pub fn interpolate(from: &PredictionSet, toward: &PredictionSet, w: f64) -> Result<PredictionSet> {
    if from.n() != toward.n() || from.k() != toward.k() {
        return Err(Error::ShapeMismatch(format!(
            "cannot mix {}x{} with {}x{}",
            from.n(),
            from.k(),
            toward.n(),
            toward.k()
        )));
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidConfig(format!("mixing weight {w} outside [0, 1]")));
    }
    let probs = from
        .probs()
        .iter()
        .zip(toward.probs())
        .map(|(a, b)| (1.0 - w) * a + w * b)
        .collect();
    PredictionSet::validate(RawPredictions::from_probs(
        Matrix::new(from.n(), from.k(), probs)?,
        toward.labels().iter().map(|&l| l as i64).collect(),
    ))
}
