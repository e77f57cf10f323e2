//! Calibration and uncertainty metrics for classifier outputs.
//!
//! Covers binned calibration errors and quality scores, sparsification
//! curves and AUSE, proper scoring rules, temperature sweeps, ensemble
//! entropy decomposition, seeded synthetic fixtures, and file formats.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod decompose;
pub mod error;
pub mod io;
pub mod prediction;
pub mod reliability;
pub mod scores;
pub mod sparsification;
pub mod synth;
pub mod temper;

pub use config::{BinningConfig, SparsificationConfig, TemperatureGrid};
pub use decompose::{decompose, DecompositionResult};
pub use error::{Error, Result};
pub use prediction::{EnsemblePredictions, Matrix, PredictionSet, ProbVector, RawPredictions};
pub use reliability::{BinMode, ReliabilityCurve};
pub use scores::{ScoreKind, ScoreVector};
pub use sparsification::{AuseResult, CurveSeries, MeritKind, SorterKind};
pub use synth::{SkewTarget, SynthConfig};
pub use temper::{Metric, SweepOptions, SweepResult};
