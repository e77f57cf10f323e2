//! Validated prediction containers shared by every metric.
//!
//! A [`PredictionSet`] is the universal input: `N` instances over `K` classes
//! with probabilities always materialized, optional logits, and dense integer
//! labels. Construction goes through [`PredictionSet::validate`], which enforces
//! the simplex, shape, and label constraints once so that downstream code can
//! index freely.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum allowed deviation of a probability row sum from one.
pub const SIMPLEX_TOL: f64 = 1e-6;

/// Floor applied to probabilities before taking a logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Rows whose sum is already this close to one are left untouched, so that
/// re-validating an already validated set is a bitwise no-op.
fn renorm_threshold(k: usize) -> f64 {
    4.0 * k as f64 * f64::EPSILON
}

/// Dense row-major matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// A single probability mass vector over `K >= 2` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::ShapeMismatch(format!(
                "probability vector needs at least 2 classes, got {}",
                p.len()
            )));
        }
        let mut p = p;
        normalize_row(&mut p, 0)?;
        Ok(Self(p))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ProbVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Checks one probability row in place and renormalizes it when its sum is
/// within tolerance but not already exact.
fn normalize_row(row: &mut [f64], index: usize) -> Result<()> {
    let mut sum = 0.0;
    for v in row.iter_mut() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row: index });
        }
        if *v < -SIMPLEX_TOL || *v > 1.0 + SIMPLEX_TOL {
            return Err(Error::SimplexViolation {
                row: index,
                reason: format!("entry {v} outside [0, 1]"),
            });
        }
        *v = v.clamp(0.0, 1.0);
        sum += *v;
    }
    let off = (sum - 1.0).abs();
    if off > SIMPLEX_TOL {
        return Err(Error::SimplexViolation {
            row: index,
            reason: format!("row sums to {sum}"),
        });
    }
    if off > renorm_threshold(row.len()) {
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(())
}

/// Numerically stable softmax of `logits` written into `out`.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, &mut out);
    out
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Image-space origin of a segmentation pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRef {
    pub image_id: u32,
    pub row: u32,
    pub col: u32,
}

/// Unvalidated input to [`PredictionSet::validate`].
#[derive(Debug, Clone, Default)]
pub struct RawPredictions {
    pub logits: Option<Matrix>,
    pub probs: Option<Matrix>,
    pub labels: Vec<i64>,
    pub class_names: Option<Vec<String>>,
    pub provenance: Option<Vec<PixelRef>>,
}

impl RawPredictions {
    pub fn from_logits(logits: Matrix, labels: Vec<i64>) -> Self {
        Self {
            logits: Some(logits),
            labels,
            ..Default::default()
        }
    }

    pub fn from_probs(probs: Matrix, labels: Vec<i64>) -> Self {
        Self {
            probs: Some(probs),
            labels,
            ..Default::default()
        }
    }
}

/// `N` validated predictions over `K` classes.
///
/// Probabilities are always present. When logits are present they are
/// authoritative: the stored probabilities are exactly their row softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    k: usize,
    logits: Option<Vec<f64>>,
    probs: Vec<f64>,
    labels: Vec<usize>,
    predicted: Vec<usize>,
    class_names: Option<Vec<String>>,
    provenance: Option<Vec<PixelRef>>,
}

impl PredictionSet {
    pub fn validate(raw: RawPredictions) -> Result<Self> {
        let n = raw.labels.len();
        if n == 0 {
            return Err(Error::ShapeMismatch("prediction set is empty".into()));
        }
        let k = match (&raw.logits, &raw.probs) {
            (None, None) => {
                return Err(Error::ShapeMismatch(
                    "neither logits nor probabilities given".into(),
                ))
            }
            (Some(l), Some(p)) if l.cols() != p.cols() => {
                return Err(Error::ShapeMismatch(format!(
                    "logits have {} classes, probabilities {}",
                    l.cols(),
                    p.cols()
                )))
            }
            (Some(m), _) | (None, Some(m)) => m.cols(),
        };
        if k < 2 {
            return Err(Error::ShapeMismatch(format!("need K >= 2, got {k}")));
        }
        for m in [&raw.logits, &raw.probs].into_iter().flatten() {
            if m.rows() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{} prediction rows for {n} labels",
                    m.rows()
                )));
            }
        }
        if let Some(names) = &raw.class_names {
            if names.len() != k {
                return Err(Error::ShapeMismatch(format!(
                    "{} class names for {k} classes",
                    names.len()
                )));
            }
        }
        if let Some(prov) = &raw.provenance {
            if prov.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{} provenance entries for {n} instances",
                    prov.len()
                )));
            }
        }

        let mut labels = Vec::with_capacity(n);
        for (index, &label) in raw.labels.iter().enumerate() {
            if label < 0 || label as u64 >= k as u64 {
                return Err(Error::LabelOutOfRange {
                    index,
                    label,
                    classes: k,
                });
            }
            labels.push(label as usize);
        }

        let probs = match (&raw.logits, raw.probs) {
            (Some(logits), given) => {
                let mut probs = vec![0.0; n * k];
                for (i, (out, l)) in probs
                    .chunks_exact_mut(k)
                    .zip(logits.as_slice().chunks_exact(k))
                    .enumerate()
                {
                    if l.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite { row: i });
                    }
                    softmax_into(l, out);
                }
                if let Some(given) = given {
                    for (i, (p, q)) in given
                        .as_slice()
                        .chunks_exact(k)
                        .zip(probs.chunks_exact(k))
                        .enumerate()
                    {
                        let deviation = p
                            .iter()
                            .zip(q)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max);
                        if deviation.is_nan() || deviation > SIMPLEX_TOL {
                            return Err(Error::LogitProbMismatch { row: i, deviation });
                        }
                    }
                }
                probs
            }
            (None, Some(given)) => {
                let mut probs = given.into_vec();
                for (i, row) in probs.chunks_exact_mut(k).enumerate() {
                    normalize_row(row, i)?;
                }
                probs
            }
            (None, None) => unreachable!(),
        };

        let predicted = probs.chunks_exact(k).map(argmax).collect();
        Ok(Self {
            k,
            logits: raw.logits.map(Matrix::into_vec),
            probs,
            labels,
            predicted,
            class_names: raw.class_names,
            provenance: raw.provenance,
        })
    }

    pub fn from_logits(logits: Matrix, labels: Vec<usize>) -> Result<Self> {
        Self::validate(RawPredictions::from_logits(
            logits,
            labels.into_iter().map(|l| l as i64).collect(),
        ))
    }

    pub fn from_probs(probs: Matrix, labels: Vec<usize>) -> Result<Self> {
        Self::validate(RawPredictions::from_probs(
            probs,
            labels.into_iter().map(|l| l as i64).collect(),
        ))
    }

    /// Converts back into unvalidated form, keeping both logits and
    /// probabilities.
    pub fn to_raw(&self) -> RawPredictions {
        let n = self.n();
        RawPredictions {
            logits: self
                .logits
                .clone()
                .map(|l| Matrix::new(n, self.k, l).expect("shape is validated")),
            probs: Some(Matrix::new(n, self.k, self.probs.clone()).expect("shape is validated")),
            labels: self.labels.iter().map(|&l| l as i64).collect(),
            class_names: self.class_names.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.probs.chunks_exact(self.k)
    }

    pub fn logits(&self) -> Option<&[f64]> {
        self.logits.as_deref()
    }

    pub fn has_logits(&self) -> bool {
        self.logits.is_some()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Predicted class per instance (argmax, lowest index on ties).
    pub fn predicted(&self) -> &[usize] {
        &self.predicted
    }

    pub fn is_correct(&self, i: usize) -> bool {
        self.predicted[i] == self.labels[i]
    }

    pub fn accuracy(&self) -> f64 {
        let correct = (0..self.n()).filter(|&i| self.is_correct(i)).count();
        correct as f64 / self.n() as f64
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn class_name(&self, class: usize) -> String {
        match &self.class_names {
            Some(names) => names[class].clone(),
            None => format!("class_{class}"),
        }
    }

    pub fn provenance(&self) -> Option<&[PixelRef]> {
        self.provenance.as_deref()
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.k {
            return Err(Error::ShapeMismatch(format!(
                "{} class names for {} classes",
                names.len(),
                self.k
            )));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn with_provenance(mut self, provenance: Vec<PixelRef>) -> Result<Self> {
        if provenance.len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} provenance entries for {} instances",
                provenance.len(),
                self.n()
            )));
        }
        self.provenance = Some(provenance);
        Ok(self)
    }

    /// Number of instances carrying each label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Classes that occur at least once among the labels, ascending.
    pub fn classes_present(&self) -> Vec<usize> {
        self.class_counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(c, _)| c)
            .collect()
    }

    /// Instance indices whose label is `class`.
    pub fn indices_with_label(&self, class: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == class).collect()
    }

    /// Subset in the given index order. Indices must be in range and non-empty.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySubset);
        }
        let k = self.k;
        let gather = |src: &[f64]| -> Vec<f64> {
            indices
                .iter()
                .flat_map(|&i| src[i * k..(i + 1) * k].iter().copied())
                .collect()
        };
        Ok(Self {
            k,
            logits: self.logits.as_deref().map(gather),
            probs: gather(&self.probs),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            predicted: indices.iter().map(|&i| self.predicted[i]).collect(),
            class_names: self.class_names.clone(),
            provenance: self
                .provenance
                .as_ref()
                .map(|p| indices.iter().map(|&i| p[i]).collect()),
        })
    }

    /// Replaces labels, keeping predictions. Used to build label-permuted
    /// variants of a set.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} instances",
                labels.len(),
                self.n()
            )));
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= self.k) {
            return Err(Error::LabelOutOfRange {
                index,
                label: label as i64,
                classes: self.k,
            });
        }
        Ok(Self {
            labels,
            ..self.clone()
        })
    }
}

/// `M >= 1` prediction sets over identical instances and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePredictions {
    members: Vec<PredictionSet>,
}

impl EnsemblePredictions {
    pub fn new(members: Vec<PredictionSet>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::EnsembleMisaligned("ensemble has no members".into()));
        };
        for (m, member) in members.iter().enumerate().skip(1) {
            if member.n() != first.n() || member.k() != first.k() {
                return Err(Error::EnsembleMisaligned(format!(
                    "member {m} is {}x{}, member 0 is {}x{}",
                    member.n(),
                    member.k(),
                    first.n(),
                    first.k()
                )));
            }
            if member.labels() != first.labels() {
                return Err(Error::EnsembleMisaligned(format!(
                    "member {m} labels differ from member 0"
                )));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[PredictionSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n(&self) -> usize {
        self.members[0].n()
    }

    pub fn k(&self) -> usize {
        self.members[0].k()
    }

    pub fn labels(&self) -> &[usize] {
        self.members[0].labels()
    }
}
