//! Sparsification curves and the area under the sparsification error (AUSE).
//!
//! Instances are removed most-uncertain first according to a sorter, and a
//! merit (IoU, accuracy or Brier) is tracked on what remains. The oracle removes
//! misclassified instances first. AUSE integrates the gap between the two
//! curves over the removal fraction with the trapezoid rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::SparsificationConfig;
use crate::error::{Error, Result};
use crate::prediction::PredictionSet;
use crate::scores::{brier_instance, ScoreKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SorterKind {
    VariationRatio,
    Entropy,
    CrossEntropy,
    Oracle,
}

impl SorterKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::VariationRatio => "variation_ratio",
            Self::Entropy => "entropy",
            Self::CrossEntropy => "cross_entropy",
            Self::Oracle => "oracle",
        }
    }

    fn score_kind(&self) -> Option<ScoreKind> {
        match self {
            Self::VariationRatio => Some(ScoreKind::VariationRatio),
            Self::Entropy => Some(ScoreKind::Entropy),
            Self::CrossEntropy => Some(ScoreKind::CrossEntropy),
            Self::Oracle => None,
        }
    }
}

impl fmt::Display for SorterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SorterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vr" | "variation_ratio" => Ok(Self::VariationRatio),
            "entropy" | "s" => Ok(Self::Entropy),
            "ce" | "cross_entropy" => Ok(Self::CrossEntropy),
            "oracle" => Ok(Self::Oracle),
            other => Err(Error::UnknownSorter(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeritKind {
    Iou,
    Accuracy,
    Brier,
}

impl MeritKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Iou => "iou",
            Self::Accuracy => "accuracy",
            Self::Brier => "brier",
        }
    }

    /// Brier is a loss; IoU and accuracy are rewards.
    pub fn higher_is_better(&self) -> bool {
        !matches!(self, Self::Brier)
    }
}

impl fmt::Display for MeritKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeritKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iou" => Ok(Self::Iou),
            "accuracy" => Ok(Self::Accuracy),
            "brier" => Ok(Self::Brier),
            other => Err(Error::UnknownMerit(other.to_string())),
        }
    }
}

/// Merit sampled over the removal-fraction grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub fractions: Vec<f64>,
    pub values: Vec<f64>,
    pub merit_kind: MeritKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuseResult {
    pub ause: f64,
    pub oracle: CurveSeries,
    pub method: CurveSeries,
    pub sorter_kind: SorterKind,
    pub class_id: Option<usize>,
    /// Set when the method curve beats the oracle at some grid point.
    pub negative_area_flag: bool,
}

impl AuseResult {
    /// Signed sparsification error at each grid point, positive where the
    /// method is worse than the oracle.
    pub fn error_curve(&self) -> Vec<f64> {
        sparsification_error(&self.oracle, &self.method)
    }
}

fn check_class(set: &PredictionSet, class_id: Option<usize>) -> Result<()> {
    match class_id {
        Some(class) if class >= set.k() => Err(Error::UnknownClass {
            class,
            classes: set.k(),
        }),
        _ => Ok(()),
    }
}

/// Indices sorted by score descending; equal scores keep ascending index.
pub fn order_by_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Removal order for a sorter. The cross-entropy sorter reads the labels.
pub fn sort_order(set: &PredictionSet, sorter: SorterKind) -> Vec<usize> {
    match sorter.score_kind() {
        Some(kind) => {
            let scores: Vec<f64> = set
                .rows()
                .zip(set.labels())
                .map(|(p, &y)| kind.score(p, y))
                .collect();
            order_by_scores(&scores)
        }
        None => oracle_order(set, None).expect("no class given"),
    }
}

pub fn sort_order_named(set: &PredictionSet, sorter: &str) -> Result<Vec<usize>> {
    Ok(sort_order(set, sorter.parse()?))
}

fn is_error(set: &PredictionSet, i: usize, class_id: Option<usize>) -> bool {
    match class_id {
        None => !set.is_correct(i),
        Some(c) => (set.predicted()[i] == c) != (set.labels()[i] == c),
    }
}

/// Errors first, then the rest, each group in ascending index order. With a
/// class, errors are the false positives and false negatives of that class.
pub fn oracle_order(set: &PredictionSet, class_id: Option<usize>) -> Result<Vec<usize>> {
    check_class(set, class_id)?;
    let (mut errors, correct): (Vec<usize>, Vec<usize>) =
        (0..set.n()).partition(|&i| is_error(set, i, class_id));
    errors.extend(correct);
    Ok(errors)
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    count: usize,
    correct: usize,
    tp: usize,
    fp: usize,
    fn_: usize,
    brier_sum: f64,
}

impl Tally {
    fn add(&mut self, set: &PredictionSet, i: usize, merit: MeritKind, class_id: Option<usize>) {
        self.count += 1;
        match merit {
            MeritKind::Accuracy => self.correct += set.is_correct(i) as usize,
            MeritKind::Iou => {
                let c = class_id.expect("checked by caller");
                let predicted = set.predicted()[i] == c;
                let actual = set.labels()[i] == c;
                match (predicted, actual) {
                    (true, true) => self.tp += 1,
                    (true, false) => self.fp += 1,
                    (false, true) => self.fn_ += 1,
                    (false, false) => {}
                }
            }
            MeritKind::Brier => self.brier_sum += brier_instance(set.row(i), set.labels()[i]),
        }
    }

    fn value(&self, merit: MeritKind) -> f64 {
        match merit {
            MeritKind::Accuracy => self.correct as f64 / self.count as f64,
            MeritKind::Iou => {
                let denom = self.tp + self.fp + self.fn_;
                if denom == 0 {
                    1.0
                } else {
                    self.tp as f64 / denom as f64
                }
            }
            MeritKind::Brier => self.brier_sum / self.count as f64,
        }
    }
}

fn check_merit(set: &PredictionSet, merit: MeritKind, class_id: Option<usize>) -> Result<()> {
    check_class(set, class_id)?;
    if merit == MeritKind::Iou && class_id.is_none() {
        return Err(Error::MissingClass);
    }
    Ok(())
}

/// Merit over the given instances. IoU is computed for `class_id` and is 1 when
/// the class has no true positives, false positives or false negatives.
/// Accuracy and Brier ignore the class.
pub fn merit_subset(
    set: &PredictionSet,
    indices: &[usize],
    merit: MeritKind,
    class_id: Option<usize>,
) -> Result<f64> {
    check_merit(set, merit, class_id)?;
    if indices.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut tally = Tally::default();
    for &i in indices {
        tally.add(set, i, merit, class_id);
    }
    Ok(tally.value(merit))
}

pub fn merit(set: &PredictionSet, merit_kind: MeritKind, class_id: Option<usize>) -> Result<f64> {
    let all: Vec<usize> = (0..set.n()).collect();
    merit_subset(set, &all, merit_kind, class_id)
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "order has {} entries for {n} instances",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::ShapeMismatch("order is not a permutation".into()));
        }
    }
    Ok(())
}

/// Merit of the remainder after removing the first `floor(f * N)` instances of
/// `order`, for every fraction `f` of the grid.
pub fn sparsification_curve(
    set: &PredictionSet,
    order: &[usize],
    merit_kind: MeritKind,
    cfg: SparsificationConfig,
    class_id: Option<usize>,
) -> Result<CurveSeries> {
    check_merit(set, merit_kind, class_id)?;
    let n = set.n();
    check_permutation(order, n)?;
    let fractions = cfg.fractions();
    let removed: Vec<usize> = fractions
        .iter()
        .map(|&f| SparsificationConfig::removed_count(f, n))
        .collect();
    if removed.iter().any(|&r| r >= n) {
        return Err(Error::EmptySubset);
    }

    // Walk the order backwards so each suffix tally is built once.
    let mut values = vec![0.0; fractions.len()];
    let mut pending = (0..removed.len()).rev().peekable();
    let mut tally = Tally::default();
    for pos in (0..n).rev() {
        tally.add(set, order[pos], merit_kind, class_id);
        while let Some(&j) = pending.peek() {
            if removed[j] != pos {
                break;
            }
            values[j] = tally.value(merit_kind);
            pending.next();
        }
    }
    Ok(CurveSeries {
        fractions,
        values,
        merit_kind,
    })
}

fn sparsification_error(oracle: &CurveSeries, method: &CurveSeries) -> Vec<f64> {
    let sign = if oracle.merit_kind.higher_is_better() {
        1.0
    } else {
        -1.0
    };
    oracle
        .values
        .iter()
        .zip(&method.values)
        .map(|(o, m)| sign * (o - m))
        .collect()
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

/// AUSE for a precomputed method order. Useful when one sort is shared by
/// several per-class evaluations.
pub fn ause_with_order(
    set: &PredictionSet,
    method_order: &[usize],
    sorter_kind: SorterKind,
    merit_kind: MeritKind,
    cfg: SparsificationConfig,
    class_id: Option<usize>,
) -> Result<AuseResult> {
    check_merit(set, merit_kind, class_id)?;
    let oracle_class = if merit_kind == MeritKind::Iou {
        class_id
    } else {
        None
    };
    let oracle_ord = oracle_order(set, oracle_class)?;
    let oracle = sparsification_curve(set, &oracle_ord, merit_kind, cfg, class_id)?;
    let method = sparsification_curve(set, method_order, merit_kind, cfg, class_id)?;
    let error = sparsification_error(&oracle, &method);
    Ok(AuseResult {
        ause: trapezoid(&oracle.fractions, &error),
        negative_area_flag: error.iter().any(|&e| e < 0.0),
        oracle,
        method,
        sorter_kind,
        class_id,
    })
}

pub fn ause(
    set: &PredictionSet,
    sorter_kind: SorterKind,
    merit_kind: MeritKind,
    cfg: SparsificationConfig,
    class_id: Option<usize>,
) -> Result<AuseResult> {
    check_merit(set, merit_kind, class_id)?;
    let order = match sorter_kind {
        SorterKind::Oracle if merit_kind == MeritKind::Iou => oracle_order(set, class_id)?,
        other => sort_order(set, other),
    };
    ause_with_order(set, &order, sorter_kind, merit_kind, cfg, class_id)
}

/// AUSE with instances sorted by their cross-entropy against the label.
pub fn ause_ce(
    set: &PredictionSet,
    merit_kind: MeritKind,
    cfg: SparsificationConfig,
    class_id: Option<usize>,
) -> Result<AuseResult> {
    ause(set, SorterKind::CrossEntropy, merit_kind, cfg, class_id)
}

/// One AUSE per class present in the labels, sharing a single global sort.
/// For accuracy and Brier merits the class only selects the result label;
/// the values are identical for every class.
pub fn classwise_ause(
    set: &PredictionSet,
    sorter_kind: SorterKind,
    merit_kind: MeritKind,
    cfg: SparsificationConfig,
) -> Result<Vec<AuseResult>> {
    if merit_kind != MeritKind::Iou {
        return Ok(vec![ause(set, sorter_kind, merit_kind, cfg, None)?]);
    }
    let shared = (sorter_kind != SorterKind::Oracle).then(|| sort_order(set, sorter_kind));
    set.classes_present()
        .into_iter()
        .map(|c| match &shared {
            Some(order) => ause_with_order(set, order, sorter_kind, merit_kind, cfg, Some(c)),
            None => ause(set, sorter_kind, merit_kind, cfg, Some(c)),
        })
        .collect()
}

/// Mean of [`classwise_ause`] over classes present in the labels.
pub fn mean_classwise_ause(
    set: &PredictionSet,
    sorter_kind: SorterKind,
    merit_kind: MeritKind,
    cfg: SparsificationConfig,
) -> Result<f64> {
    let results = classwise_ause(set, sorter_kind, merit_kind, cfg)?;
    Ok(results.iter().map(|r| r.ause).sum::<f64>() / results.len() as f64)
}
