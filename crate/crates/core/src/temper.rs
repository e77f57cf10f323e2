//! Temperature scaling and metric sweeps over a temperature grid.
//!
//! A sweep rescales the logits at every grid temperature, evaluates the
//! requested metrics, and records where each one is optimal. Comparing those
//! optima across metrics is what [`decoupling_report`] does.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BinningConfig, SparsificationConfig, TemperatureGrid};
use crate::error::{Error, Result};
use crate::prediction::{Matrix, PredictionSet, RawPredictions, PROB_FLOOR};
use crate::reliability::{
    bin_confidence_subset, bin_uncertainty_subset, calibration_quality_score, ece, uce,
};
use crate::scores::{brier_instance, cross_entropy_instance};
use crate::sparsification::{ause, ause_with_order, sort_order, MeritKind, SorterKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Nll,
    Brier,
    Ece,
    Uce,
    Ccqs,
    Ucqs,
    AuseV,
    AuseS,
    AuseCe,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Nll,
        Metric::Brier,
        Metric::Ece,
        Metric::Uce,
        Metric::Ccqs,
        Metric::Ucqs,
        Metric::AuseV,
        Metric::AuseS,
        Metric::AuseCe,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Nll => "nll",
            Self::Brier => "brier",
            Self::Ece => "ece",
            Self::Uce => "uce",
            Self::Ccqs => "ccqs",
            Self::Ucqs => "ucqs",
            Self::AuseV => "ause_v",
            Self::AuseS => "ause_s",
            Self::AuseCe => "ause_ce",
        }
    }

    /// Quality scores are maximized; everything else is minimized.
    pub fn higher_is_better(&self) -> bool {
        matches!(self, Self::Ccqs | Self::Ucqs)
    }

    fn sorter(&self) -> Option<SorterKind> {
        match self {
            Self::AuseV => Some(SorterKind::VariationRatio),
            Self::AuseS => Some(SorterKind::Entropy),
            Self::AuseCe => Some(SorterKind::CrossEntropy),
            _ => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMetric(s.to_string()))
    }
}

/// Row-wise `ln(clamp(p, 1e-12, 1))`. Its softmax reproduces `p` up to the
/// clamp.
pub fn logits_from_probs(p: &[f64]) -> Vec<f64> {
    p.iter().map(|v| v.clamp(PROB_FLOOR, 1.0).ln()).collect()
}

fn logits_or_recovered(set: &PredictionSet) -> Vec<f64> {
    match set.logits() {
        Some(l) => l.to_vec(),
        None => set.rows().flat_map(logits_from_probs).collect(),
    }
}

fn rebuild(set: &PredictionSet, logits: Vec<f64>) -> Result<PredictionSet> {
    let raw = RawPredictions {
        logits: Some(Matrix::new(set.n(), set.k(), logits)?),
        probs: None,
        labels: set.labels().iter().map(|&l| l as i64).collect(),
        class_names: set.class_names().map(<[String]>::to_vec),
        provenance: set.provenance().map(<[_]>::to_vec),
    };
    PredictionSet::validate(raw)
}

/// Divides the logits by `t` and re-applies the softmax. Sets without logits
/// get them recovered from the probabilities first.
pub fn apply_temperature(set: &PredictionSet, t: f64) -> Result<PredictionSet> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositiveTemperature(t));
    }
    let logits = logits_or_recovered(set).into_iter().map(|l| l / t).collect();
    rebuild(set, logits)
}

/// Multiplies the logits by `g`; `apply_temperature(distort(s, g), g)` undoes it.
pub fn scale_logits(set: &PredictionSet, g: f64) -> Result<PredictionSet> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::NonPositiveFactor(g));
    }
    let logits = logits_or_recovered(set).into_iter().map(|l| l * g).collect();
    rebuild(set, logits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub binning: BinningConfig,
    pub sparsification: SparsificationConfig,
    /// Merit used by the AUSE metrics.
    pub merit: MeritKind,
    /// Compute ECE and UCE over all instances at once instead of averaging
    /// the per-class values.
    pub holistic: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            binning: BinningConfig::default(),
            sparsification: SparsificationConfig::default(),
            merit: MeritKind::Iou,
            holistic: false,
        }
    }
}

/// Instance indices grouped by label, for classes that occur.
struct ClassIndex {
    groups: Vec<(usize, Vec<usize>)>,
}

impl ClassIndex {
    fn new(set: &PredictionSet) -> Self {
        Self {
            groups: set
                .classes_present()
                .into_iter()
                .map(|c| (c, set.indices_with_label(c)))
                .collect(),
        }
    }
}

fn mean_over<F>(groups: &[(usize, Vec<usize>)], mut f: F) -> Result<f64>
where
    F: FnMut(usize, &[usize]) -> Result<f64>,
{
    let mut total = 0.0;
    for (c, idx) in groups {
        total += f(*c, idx)?;
    }
    Ok(total / groups.len() as f64)
}

fn subset_mean(set: &PredictionSet, idx: &[usize], f: impl Fn(&[f64], usize) -> f64) -> f64 {
    idx.iter()
        .map(|&i| f(set.row(i), set.labels()[i]))
        .sum::<f64>()
        / idx.len() as f64
}

fn mean_ause(
    set: &PredictionSet,
    groups: &[(usize, Vec<usize>)],
    sorter: SorterKind,
    opts: &SweepOptions,
) -> Result<f64> {
    if opts.merit != MeritKind::Iou {
        return Ok(ause(set, sorter, opts.merit, opts.sparsification, None)?.ause);
    }
    let order = sort_order(set, sorter);
    mean_over(groups, |c, _| {
        Ok(ause_with_order(set, &order, sorter, opts.merit, opts.sparsification, Some(c))?.ause)
    })
}

/// Metric values of a (temperature-scaled) set. ECE, UCE and the AUSE family
/// are averaged over the classes present unless `holistic` is set.
fn evaluate_with(
    set: &PredictionSet,
    classes: &ClassIndex,
    metrics: &[Metric],
    opts: &SweepOptions,
) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..set.n()).collect();
    let binning = opts.binning;
    let mut out = Vec::with_capacity(metrics.len());
    for metric in metrics {
        let value = match metric {
            Metric::Nll => subset_mean(set, &all, cross_entropy_instance),
            Metric::Brier => subset_mean(set, &all, brier_instance),
            Metric::Ece if opts.holistic => ece(&bin_confidence_subset(set, 0..set.n(), binning))?,
            Metric::Uce if opts.holistic => {
                uce(&bin_uncertainty_subset(set, 0..set.n(), binning))?
            }
            Metric::Ece => mean_over(&classes.groups, |_, idx| {
                ece(&bin_confidence_subset(set, idx.iter().copied(), binning))
            })?,
            Metric::Uce => mean_over(&classes.groups, |_, idx| {
                uce(&bin_uncertainty_subset(set, idx.iter().copied(), binning))
            })?,
            Metric::Ccqs => calibration_quality_score(&bin_confidence_subset(set, 0..set.n(), binning))?,
            Metric::Ucqs => {
                calibration_quality_score(&bin_uncertainty_subset(set, 0..set.n(), binning))?
            }
            m => mean_ause(set, &classes.groups, m.sorter().expect("ause metric"), opts)?,
        };
        out.push(value);
    }
    Ok(out)
}

/// Evaluates `metrics` on `set` as-is (no temperature applied).
pub fn evaluate(set: &PredictionSet, metrics: &[Metric], opts: &SweepOptions) -> Result<Vec<f64>> {
    evaluate_with(set, &ClassIndex::new(set), metrics, opts)
}

/// Metrics of one class: reliability metrics and proper scores over the
/// instances labelled `class`, AUSE with the class IoU over all instances.
fn evaluate_class(
    set: &PredictionSet,
    class: usize,
    idx: &[usize],
    metrics: &[Metric],
    opts: &SweepOptions,
) -> Result<Vec<f64>> {
    let binning = opts.binning;
    let conf = || bin_confidence_subset(set, idx.iter().copied(), binning);
    let unc = || bin_uncertainty_subset(set, idx.iter().copied(), binning);
    metrics
        .iter()
        .map(|metric| match metric {
            Metric::Nll => Ok(subset_mean(set, idx, cross_entropy_instance)),
            Metric::Brier => Ok(subset_mean(set, idx, brier_instance)),
            Metric::Ece => ece(&conf()),
            Metric::Uce => uce(&unc()),
            Metric::Ccqs => calibration_quality_score(&conf()),
            Metric::Ucqs => calibration_quality_score(&unc()),
            m => {
                let sorter = m.sorter().expect("ause metric");
                let class_id = (opts.merit == MeritKind::Iou).then_some(class);
                Ok(ause(set, sorter, opts.merit, opts.sparsification, class_id)?.ause)
            }
        })
        .collect()
}

/// Position of the optimum; ties resolve to the lowest index.
fn optimum_index(values: &[f64], maximize: bool) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let better = if maximize {
            v > values[best]
        } else {
            v < values[best]
        };
        if better {
            best = i;
        }
    }
    best
}

fn min_max_scale(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; values.len()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: TemperatureGrid,
    pub metrics: BTreeMap<Metric, Vec<f64>>,
    /// Optimal temperature per metric (argmax for quality scores).
    pub argmin_t: BTreeMap<Metric, f64>,
    pub argmin_index: BTreeMap<Metric, usize>,
    /// Min-max scaled curves.
    pub normalized: BTreeMap<Metric, Vec<f64>>,
}

impl SweepResult {
    fn from_columns(grid: TemperatureGrid, metrics: &[Metric], rows: Vec<Vec<f64>>) -> Self {
        let mut out = Self {
            grid,
            metrics: BTreeMap::new(),
            argmin_t: BTreeMap::new(),
            argmin_index: BTreeMap::new(),
            normalized: BTreeMap::new(),
        };
        for (j, &metric) in metrics.iter().enumerate() {
            let values: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let best = optimum_index(&values, metric.higher_is_better());
            out.argmin_t.insert(metric, out.grid.values()[best]);
            out.argmin_index.insert(metric, best);
            out.normalized.insert(metric, min_max_scale(&values));
            out.metrics.insert(metric, values);
        }
        out
    }
}

fn check_metrics(metrics: &[Metric]) -> Result<Vec<Metric>> {
    if metrics.is_empty() {
        return Err(Error::InvalidConfig("no metrics requested".into()));
    }
    let mut unique = metrics.to_vec();
    unique.sort();
    unique.dedup();
    Ok(unique)
}

/// Evaluates every metric at every grid temperature. Temperatures are
/// processed in parallel and gathered in grid order.
pub fn sweep(
    set: &PredictionSet,
    grid: &TemperatureGrid,
    metrics: &[Metric],
    opts: &SweepOptions,
) -> Result<SweepResult> {
    let metrics = check_metrics(metrics)?;
    let base = if set.has_logits() {
        set.clone()
    } else {
        rebuild(set, logits_or_recovered(set))?
    };
    let classes = ClassIndex::new(&base);
    let rows = grid
        .values()
        .par_iter()
        .map(|&t| evaluate_with(&apply_temperature(&base, t)?, &classes, &metrics, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::from_columns(grid.clone(), &metrics, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class_id: usize,
    pub name: String,
    pub count: usize,
    pub argmin_t: BTreeMap<Metric, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub classes: Vec<usize>,
    pub metrics: BTreeMap<Metric, Spread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClasswiseTable {
    pub rows: Vec<ClassRow>,
    pub summary: Vec<GroupSummary>,
}

/// Mean and population standard deviation.
pub fn spread(values: &[f64]) -> Spread {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Spread {
        mean,
        std: var.sqrt(),
    }
}

/// Per-class optimal temperatures, plus mean and spread of those optima over
/// the `group_size` most and least represented classes.
pub fn classwise_table(
    set: &PredictionSet,
    grid: &TemperatureGrid,
    metrics: &[Metric],
    opts: &SweepOptions,
    group_size: usize,
) -> Result<ClasswiseTable> {
    let metrics = check_metrics(metrics)?;
    let classes = ClassIndex::new(set);
    let counts = set.class_counts();
    let per_t = grid
        .values()
        .par_iter()
        .map(|&t| {
            let scaled = apply_temperature(set, t)?;
            classes
                .groups
                .iter()
                .map(|(c, idx)| evaluate_class(&scaled, *c, idx, &metrics, opts))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<ClassRow> = classes
        .groups
        .iter()
        .enumerate()
        .map(|(g, (c, _))| {
            let column: Vec<Vec<f64>> = per_t.iter().map(|at_t| at_t[g].clone()).collect();
            let sweep = SweepResult::from_columns(grid.clone(), &metrics, column);
            ClassRow {
                class_id: *c,
                name: set.class_name(*c),
                count: counts[*c],
                argmin_t: sweep.argmin_t,
            }
        })
        .collect();

    let mut by_count: Vec<&ClassRow> = rows.iter().collect();
    by_count.sort_by(|a, b| b.count.cmp(&a.count).then(a.class_id.cmp(&b.class_id)));
    let take = group_size.clamp(1, by_count.len().max(1));
    let most: Vec<&ClassRow> = by_count.iter().take(take).copied().collect();
    let least: Vec<&ClassRow> = by_count.iter().rev().take(take).copied().collect();
    let summarize = |name: &str, group: &[&ClassRow]| GroupSummary {
        group: name.to_string(),
        classes: group.iter().map(|r| r.class_id).collect(),
        metrics: metrics
            .iter()
            .map(|m| {
                let ts: Vec<f64> = group.iter().map(|r| r.argmin_t[m]).collect();
                (*m, spread(&ts))
            })
            .collect(),
    };
    let summary = if rows.is_empty() {
        Vec::new()
    } else {
        vec![
            summarize("most_represented", &most),
            summarize("least_represented", &least),
        ]
    };
    Ok(ClasswiseTable { rows, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGap {
    pub first: Metric,
    pub second: Metric,
    pub difference: f64,
    pub index_distance: usize,
    /// Optima more than one grid step apart.
    pub flagged: bool,
}

/// Pairwise distances between the optimal temperatures of a sweep, keyed
/// `"first/second"` in metric order.
pub fn decoupling_report(sweep: &SweepResult) -> BTreeMap<String, PairGap> {
    let metrics: Vec<Metric> = sweep.argmin_t.keys().copied().collect();
    let mut out = BTreeMap::new();
    for (i, a) in metrics.iter().enumerate() {
        for b in &metrics[i + 1..] {
            let ia = sweep.argmin_index[a];
            let ib = sweep.argmin_index[b];
            let index_distance = ia.abs_diff(ib);
            out.insert(
                format!("{a}/{b}"),
                PairGap {
                    first: *a,
                    second: *b,
                    difference: (sweep.argmin_t[a] - sweep.argmin_t[b]).abs(),
                    index_distance,
                    flagged: index_distance > 1,
                },
            );
        }
    }
    out
}
