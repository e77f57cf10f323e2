//! Validated knobs for binning, sparsification and temperature sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of equal-width bins over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningConfig {
    m_bins: usize,
}

impl BinningConfig {
    pub fn new(m_bins: usize) -> Result<Self> {
        if m_bins == 0 {
            return Err(Error::InvalidConfig("number of bins must be >= 1".into()));
        }
        Ok(Self { m_bins })
    }

    pub fn m_bins(&self) -> usize {
        self.m_bins
    }
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self { m_bins: 10 }
    }
}

/// Removal-fraction grid `{0, max_fraction/(steps-1), ..., max_fraction}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsificationConfig {
    steps: usize,
    max_fraction: f64,
}

impl SparsificationConfig {
    pub fn new(steps: usize, max_fraction: f64) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidConfig(format!(
                "sparsification needs at least 2 steps, got {steps}"
            )));
        }
        if !(max_fraction > 0.0 && max_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "max fraction must lie in (0, 1), got {max_fraction}"
            )));
        }
        Ok(Self {
            steps,
            max_fraction,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn max_fraction(&self) -> f64 {
        self.max_fraction
    }

    pub fn fractions(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|j| self.max_fraction * j as f64 / last)
            .collect()
    }

    /// Instances removed at fraction `f` of a set of size `n`: `floor(f * n)`.
    /// The small slack absorbs representation error such as `0.75/3*4 = 0.99..`.
    pub fn removed_count(fraction: f64, n: usize) -> usize {
        ((fraction * n as f64) + 1e-9).floor() as usize
    }
}

impl Default for SparsificationConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            max_fraction: 0.99,
        }
    }
}

/// Strictly increasing positive temperatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureGrid {
    values: Vec<f64>,
}

impl TemperatureGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if let Some(&t) = values.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::NonPositiveTemperature(t));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "temperature grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { values })
    }

    /// `min, min + step, ...` up to `max` inclusive. Points are computed as
    /// `min + i * step` and rounded to 12 decimals so that e.g. the default
    /// grid contains exactly `2.0`.
    pub fn range(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min > 0.0) || !min.is_finite() {
            return Err(Error::NonPositiveTemperature(min));
        }
        if !(step > 0.0) || !step.is_finite() || !(max >= min) || !max.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "invalid temperature range {min}..={max} step {step}"
            )));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        let values = (0..count)
            .map(|i| {
                let t = min + i as f64 * step;
                (t * 1e12).round() / 1e12
            })
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for TemperatureGrid {
    fn default() -> Self {
        Self::range(0.1, 10.0, 0.1).expect("default grid is valid")
    }
}
