//! Acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAILURES` are still evaluated and reported
//! as FAIL; they only stop the process exit code from turning red. Each
//! entry carries the reason the criterion cannot hold as stated.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use calimetr::config::{BinningConfig, SparsificationConfig, TemperatureGrid};
use calimetr::io::{read_report, read_tensor, write_report, write_tensor, InputDigest, Provenance, Report, Role, Tensor};
use calimetr::reliability::{bin_confidence, bin_uncertainty, calibration_quality_score, ece, uce};
use calimetr::scores::normalized_entropy;
use calimetr::sparsification::{ause, oracle_order, sparsification_curve};
use calimetr::temper::{apply_temperature, decoupling_report, sweep};
use calimetr::{
    decompose, synth, EnsemblePredictions, Matrix, MeritKind, Metric, PredictionSet, SkewTarget,
    SorterKind, SweepOptions, SynthConfig,
};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const EXPECTED_FAILURES: &[(u32, &str)] = &[(
    6,
    "sampling labels from each row makes P(error) = 1 - max p, not the normalized entropy, \
     so UCE of a calibrated set stays near the binned entropy/variation-ratio gap",
)];

struct Rng(Xoshiro256PlusPlus);

impl Rng {
    fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// 1: normalized entropy bracket for a 95% top class over three classes.
fn entropy_bracket() -> Outcome {
    let direct = |p: &[f64]| -> f64 {
        -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>() / 3f64.ln()
    };
    let lo = normalized_entropy(&[0.95, 0.05, 0.0]);
    let hi = normalized_entropy(&[0.95, 0.025, 0.025]);
    let pass = (lo - 0.1807).abs() < 1e-3
        && (hi - 0.2122).abs() < 1e-3
        && (lo - direct(&[0.95, 0.05, 0.0])).abs() < 1e-15
        && (hi - direct(&[0.95, 0.025, 0.025])).abs() < 1e-15;
    outcome(pass, format!("H(0.95,0.05,0) = {lo:.4}, H(0.95,0.025,0.025) = {hi:.4}"))
}

// 2: argmax and accuracy survive temperature scaling.
fn argmax_invariance() -> Outcome {
    let mut rng = Rng::new(2);
    let (n, k) = (10_000, 10);
    let logits: Vec<f64> = (0..n * k).map(|_| 3.0 * rng.normal()).collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
    let set = PredictionSet::from_logits(Matrix::new(n, k, logits.clone()).unwrap(), labels).unwrap();
    let mut mismatches = 0usize;
    let mut accuracy_drift = 0.0f64;
    for _ in 0..20 {
        let t = 0.1 + 9.9 * rng.uniform();
        let scaled = apply_temperature(&set, t).unwrap();
        for i in 0..n {
            let row = &logits[i * k..(i + 1) * k];
            let mut best = 0;
            for c in 1..k {
                if row[c] / t > row[best] / t {
                    best = c;
                }
            }
            if scaled.predicted()[i] != set.predicted()[i] || scaled.predicted()[i] != best {
                mismatches += 1;
            }
        }
        accuracy_drift = accuracy_drift.max((scaled.accuracy() - set.accuracy()).abs());
    }
    outcome(
        mismatches == 0 && accuracy_drift == 0.0,
        format!("{mismatches} argmax changes over 200000 cases, accuracy drift {accuracy_drift:e}"),
    )
}

fn random_row(rng: &mut Rng, k: usize, zero_rate: f64) -> Vec<f64> {
    loop {
        let mut row: Vec<f64> = (0..k)
            .map(|_| if rng.uniform() < zero_rate { 0.0 } else { (2.0 * rng.normal()).exp() })
            .collect();
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
            return row;
        }
    }
}

// 3: total = aleatoric + epistemic, and one member has no epistemic part.
fn decomposition_identity() -> Outcome {
    let mut rng = Rng::new(3);
    let mut worst = 0.0f64;
    let mut single_member_nonzero = 0usize;
    for e in 0..1000 {
        let m = [1, 2, 5, 16][e % 4];
        let k = [2, 3, 19][(e / 4) % 3];
        let n = 1 + e % 7;
        let labels: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let members = (0..m)
            .map(|_| {
                let rows: Vec<Vec<f64>> = (0..n).map(|_| random_row(&mut rng, k, 0.2)).collect();
                PredictionSet::from_probs(Matrix::from_rows(&rows).unwrap(), labels.clone()).unwrap()
            })
            .collect();
        let d = decompose::decompose(&EnsemblePredictions::new(members).unwrap()).unwrap();
        for i in 0..n {
            worst = worst.max((d.total[i] - d.aleatoric[i] - d.epistemic[i]).abs());
            if m == 1 && d.epistemic[i] != 0.0 {
                single_member_nonzero += 1;
            }
        }
    }
    outcome(
        worst <= 1e-9 && single_member_nonzero == 0,
        format!("max |total - aleatoric - epistemic| = {worst:e}, nonzero single-member epistemic: {single_member_nonzero}"),
    )
}

/// Visits every permutation of `items` (Heap's algorithm).
fn for_each_permutation(items: &mut [usize], f: &mut impl FnMut(&[usize])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    f(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            f(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

// 4: no removal order beats the oracle under the accuracy merit.
fn oracle_optimality() -> Outcome {
    // The accuracy curve depends only on which instances are correct, so
    // every correctness pattern for N <= 7 covers all prediction sets.
    let cfg = SparsificationConfig::default();
    let mut sets = 0usize;
    let mut orders = 0usize;
    let mut violations = 0usize;
    let mut untight = 0usize;
    let mut oracle_ause_max = 0.0f64;
    for n in 1..=7usize {
        for pattern in 0u32..(1 << n) {
            let rows: Vec<[f64; 2]> = (0..n).map(|_| [0.8, 0.2]).collect();
            let labels: Vec<usize> = (0..n).map(|i| if pattern >> i & 1 == 1 { 0 } else { 1 }).collect();
            let set = PredictionSet::from_probs(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
            let oracle = sparsification_curve(&set, &oracle_order(&set, None).unwrap(), MeritKind::Accuracy, cfg, None)
                .unwrap();
            let mut best = vec![f64::NEG_INFINITY; oracle.values.len()];
            let mut items: Vec<usize> = (0..n).collect();
            for_each_permutation(&mut items, &mut |perm| {
                let curve = sparsification_curve(&set, perm, MeritKind::Accuracy, cfg, None).unwrap();
                for (j, (&v, &o)) in curve.values.iter().zip(&oracle.values).enumerate() {
                    if v > o + 1e-12 {
                        violations += 1;
                    }
                    best[j] = best[j].max(v);
                }
                orders += 1;
            });
            if best.iter().zip(&oracle.values).any(|(b, o)| (b - o).abs() > 1e-12) {
                untight += 1;
            }
            let a = ause(&set, SorterKind::Oracle, MeritKind::Accuracy, cfg, None).unwrap();
            oracle_ause_max = oracle_ause_max.max(a.ause.abs());
            sets += 1;
        }
    }
    outcome(
        violations == 0 && untight == 0 && oracle_ause_max == 0.0,
        format!(
            "{sets} sets, {orders} orders: {violations} grid points above the oracle, \
             oracle not attained in {untight} sets, max |oracle AUSE| = {oracle_ause_max:e}"
        ),
    )
}

/// Straight-from-definition metrics sharing no code with the library.
mod brute {
    pub struct Inst {
        pub p: Vec<f64>,
        pub label: usize,
    }

    pub fn top(p: &[f64]) -> (f64, usize) {
        let mut best = 0;
        for c in 1..p.len() {
            if p[c] > p[best] {
                best = c;
            }
        }
        (p[best], best)
    }

    pub fn entropy(p: &[f64]) -> f64 {
        let mut h = 0.0;
        for &q in p {
            if q > 0.0 {
                h -= q * q.ln();
            }
        }
        h / (p.len() as f64).ln()
    }

    /// Populated bins as (count, mean value, outcome rate); bins are
    /// `[i/M, (i+1)/M)` with the last one closed.
    pub fn bins(values: &[f64], outcomes: &[bool], m: usize) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for b in 0..m {
            let lo = b as f64 / m as f64;
            let hi = (b + 1) as f64 / m as f64;
            let mut count = 0;
            let mut sum = 0.0;
            let mut hits = 0;
            for (v, o) in values.iter().zip(outcomes) {
                if *v >= lo && (*v < hi || b == m - 1) {
                    count += 1;
                    sum += v;
                    hits += *o as usize;
                }
            }
            if count > 0 {
                out.push((count, sum / count as f64, hits as f64 / count as f64));
            }
        }
        out
    }

    pub fn calibration_error(bins: &[(usize, f64, f64)], n: usize) -> f64 {
        bins.iter().map(|(c, v, r)| *c as f64 / n as f64 * (r - v).abs()).sum()
    }

    /// `1 - A / 0.25` with `A` the area between the polyline through the bin
    /// points (closed by the corners) and the diagonal. `|f(x) - x|` is
    /// linear between breakpoints and crossings, so the midpoint rule is exact.
    pub fn quality(bins: &[(usize, f64, f64)]) -> f64 {
        let mut pts = vec![(0.0, 0.0)];
        pts.extend(bins.iter().map(|(_, v, r)| (*v, *r)));
        pts.push((1.0, 1.0));
        let mut area = 0.0;
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let width = x1 - x0;
            if width <= 0.0 {
                continue;
            }
            let f = |x: f64| y0 + (y1 - y0) * (x - x0) / width;
            let (d0, d1) = (y0 - x0, y1 - x1);
            let mut cuts = vec![x0];
            if d0 * d1 < 0.0 {
                cuts.push(x0 + width * d0 / (d0 - d1));
            }
            cuts.push(x1);
            for c in cuts.windows(2) {
                let mid = 0.5 * (c[0] + c[1]);
                area += (c[1] - c[0]) * (f(mid) - mid).abs();
            }
        }
        (1.0 - area / 0.25).max(0.0)
    }

    pub fn order_desc(scores: &[f64]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        // Insertion sort: earlier index wins ties.
        for i in 1..idx.len() {
            let mut j = i;
            while j > 0 && scores[idx[j]] > scores[idx[j - 1]] {
                idx.swap(j, j - 1);
                j -= 1;
            }
        }
        idx
    }

    fn merit(set: &[Inst], keep: &[usize], class: Option<usize>) -> f64 {
        match class {
            None => {
                let correct = keep.iter().filter(|&&i| top(&set[i].p).1 == set[i].label).count();
                correct as f64 / keep.len() as f64
            }
            Some(c) => {
                let (mut tp, mut fp, mut fneg) = (0, 0, 0);
                for &i in keep {
                    let pred = top(&set[i].p).1 == c;
                    let truth = set[i].label == c;
                    match (pred, truth) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, true) => fneg += 1,
                        _ => {}
                    }
                }
                if tp + fp + fneg == 0 {
                    1.0
                } else {
                    tp as f64 / (tp + fp + fneg) as f64
                }
            }
        }
    }

    /// AUSE for the given method order; `class` selects the IoU merit,
    /// `None` the accuracy merit.
    pub fn ause(set: &[Inst], method: &[usize], class: Option<usize>, steps: usize, max_fraction: f64) -> f64 {
        let n = set.len();
        let wrong = |i: usize| {
            let pred = top(&set[i].p).1;
            match class {
                None => pred != set[i].label,
                Some(c) => (pred == c) != (set[i].label == c),
            }
        };
        let mut oracle: Vec<usize> = (0..n).filter(|&i| wrong(i)).collect();
        oracle.extend((0..n).filter(|&i| !wrong(i)));
        let mut prev: Option<(f64, f64)> = None;
        let mut total = 0.0;
        for j in 0..steps {
            let f = max_fraction * j as f64 / (steps - 1) as f64;
            let r = (f * n as f64 + 1e-9).floor() as usize;
            let e = merit(set, &oracle[r..], class) - merit(set, &method[r..], class);
            if let Some((pf, pe)) = prev {
                total += (f - pf) * (pe + e) / 2.0;
            }
            prev = Some((f, e));
        }
        total
    }
}

fn random_small_set(rng: &mut Rng) -> PredictionSet {
    let n = 1 + rng.below(20);
    let k = 2 + rng.below(3);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| match rng.below(5) {
            0 => {
                let mut r = vec![0.0; k];
                r[rng.below(k)] = 1.0;
                r
            }
            1 => vec![1.0 / k as f64; k],
            2 => {
                // Quarters land exactly on bin edges.
                let mut r = vec![0.0; k];
                for _ in 0..4 {
                    r[rng.below(k)] += 0.25;
                }
                r
            }
            _ => random_row(rng, k, 0.15),
        })
        .collect();
    let labels = (0..n).map(|_| rng.below(k)).collect();
    PredictionSet::from_probs(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
}

// 5: library metrics agree with the brute-force definitions.
fn brute_force_oracles() -> Outcome {
    let mut rng = Rng::new(5);
    let cfg = SparsificationConfig::default();
    let bins = BinningConfig::default();
    let mut worst = 0.0f64;
    let mut worst_name = "";
    let mut track = |name: &'static str, a: f64, b: f64| {
        let d = (a - b).abs();
        if d > worst || d.is_nan() {
            worst = if d.is_nan() { f64::INFINITY } else { d };
            worst_name = name;
        }
    };
    for _ in 0..50 {
        let set = random_small_set(&mut rng);
        let insts: Vec<brute::Inst> = (0..set.n())
            .map(|i| brute::Inst {
                p: set.row(i).to_vec(),
                label: set.labels()[i],
            })
            .collect();
        let conf: Vec<f64> = insts.iter().map(|s| brute::top(&s.p).0).collect();
        let unc: Vec<f64> = insts.iter().map(|s| brute::entropy(&s.p)).collect();
        let correct: Vec<bool> = insts.iter().map(|s| brute::top(&s.p).1 == s.label).collect();
        let wrong: Vec<bool> = correct.iter().map(|c| !c).collect();
        let cb = brute::bins(&conf, &correct, 10);
        let ub = brute::bins(&unc, &wrong, 10);
        let lc = bin_confidence(&set, bins);
        let lu = bin_uncertainty(&set, bins);
        track("ece", ece(&lc).unwrap(), brute::calibration_error(&cb, set.n()));
        track("uce", uce(&lu).unwrap(), brute::calibration_error(&ub, set.n()));
        track("ccqs", calibration_quality_score(&lc).unwrap(), brute::quality(&cb));
        track("ucqs", calibration_quality_score(&lu).unwrap(), brute::quality(&ub));

        let vr: Vec<f64> = conf.iter().map(|c| 1.0 - c).collect();
        let ce: Vec<f64> = insts.iter().map(|s| -s.p[s.label].max(1e-12).ln()).collect();
        for (name, sorter, scores) in [
            ("ause_v", SorterKind::VariationRatio, &vr),
            ("ause_s", SorterKind::Entropy, &unc),
            ("ause_ce", SorterKind::CrossEntropy, &ce),
        ] {
            let order = brute::order_desc(scores);
            let lib = ause(&set, sorter, MeritKind::Accuracy, cfg, None).unwrap().ause;
            track(name, lib, brute::ause(&insts, &order, None, cfg.steps(), cfg.max_fraction()));
            for c in 0..set.k() {
                let lib = ause(&set, sorter, MeritKind::Iou, cfg, Some(c)).unwrap().ause;
                track(name, lib, brute::ause(&insts, &order, Some(c), cfg.steps(), cfg.max_fraction()));
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("50 sets, 7 metrics (AUSE under accuracy and per-class IoU): max deviation {worst:e} ({worst_name})"),
    )
}

const FIXTURE_SEED: u64 = 20240601;

fn calibrated_fixture() -> PredictionSet {
    synth::gen_calibrated(&SynthConfig::new(100_000, 5, 0.5, FIXTURE_SEED)).unwrap()
}

// 6: a calibrated-by-construction set scores as calibrated.
fn statistical_calibration() -> Outcome {
    let set = calibrated_fixture();
    let bins = BinningConfig::default();
    let c = bin_confidence(&set, bins);
    let u = bin_uncertainty(&set, bins);
    let (e, ue, q) = (ece(&c).unwrap(), uce(&u).unwrap(), calibration_quality_score(&c).unwrap());
    outcome(
        e < 0.015 && ue < 0.015 && q > 0.95,
        format!("ECE = {e:.4} (< 0.015), UCE = {ue:.4} (< 0.015), CCQS = {q:.4} (> 0.95)"),
    )
}

// 7: sweeping a distorted fixture recovers the distortion factor.
fn temperature_recovery() -> Outcome {
    let base = calibrated_fixture();
    let grid = TemperatureGrid::range(0.1, 10.0, 0.1).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for g in [0.5, 2.0] {
        let set = synth::distort(&base, g).unwrap();
        let r = sweep(&set, &grid, &[Metric::Nll, Metric::Brier, Metric::Ece], &SweepOptions::default()).unwrap();
        let (nll, brier, e) = (r.argmin_t[&Metric::Nll], r.argmin_t[&Metric::Brier], r.argmin_t[&Metric::Ece]);
        pass &= (nll - g).abs() <= 0.1 + 1e-9 && (brier - g).abs() <= 0.3 + 1e-9 && (e - g).abs() <= 0.3 + 1e-9;
        details.push(format!("g = {g}: T_nll = {nll}, T_brier = {brier}, T_ece = {e}"));
    }
    outcome(pass, details.join("; "))
}

// 8: metric optima decouple on a skewed fixture.
fn decoupling_existence() -> Outcome {
    let set = synth::gen_skewed(&SynthConfig::new(10_000, 5, 1.0, FIXTURE_SEED), SkewTarget::HighConfidence).unwrap();
    let grid = TemperatureGrid::range(0.1, 10.0, 0.1).unwrap();
    let metrics = [Metric::Nll, Metric::Ece, Metric::Ccqs, Metric::AuseV];
    let r = sweep(&set, &grid, &metrics, &SweepOptions::default()).unwrap();
    let flagged: Vec<String> = decoupling_report(&r)
        .into_iter()
        .filter(|(_, g)| g.flagged)
        .map(|(k, g)| format!("{k} ({:.1})", g.difference))
        .collect();
    let optima: Vec<String> = metrics.iter().map(|m| format!("{m} {}", r.argmin_t[m])).collect();
    outcome(
        !flagged.is_empty(),
        format!("optima [{}], flagged pairs: [{}]", optima.join(", "), flagged.join(", ")),
    )
}

// 9: AUSE_CE falls as predictions move toward the calibrated rows.
fn ause_ce_monotone() -> Outcome {
    // The start is the same model tempered flat (T = 1/0.3), a stand-in for
    // an early, underconfident training stage.
    let target = synth::gen_calibrated(&SynthConfig::new(20_000, 5, 0.5, FIXTURE_SEED)).unwrap();
    let start = synth::distort(&target, 0.3).unwrap();
    let cfg = SparsificationConfig::default();
    let values: Vec<f64> = [0.0, 0.25, 0.5, 0.75]
        .iter()
        .map(|&w| {
            let s = synth::interpolate(&start, &target, w).unwrap();
            ause(&s, SorterKind::CrossEntropy, MeritKind::Accuracy, cfg, None).unwrap().ause
        })
        .collect();
    let pass = values.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = values.iter().map(|v| format!("{v:.5}")).collect();
    outcome(pass, format!("AUSE_CE at w = 0, 0.25, 0.5, 0.75: [{}]", shown.join(", ")))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_calimetr"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn round_trips_and_determinism() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();

    let mut rng = Rng::new(10);
    let values: Vec<f32> = (0..7 * 13).map(|_| f32::from_bits(rng.0.next_u64() as u32 & 0x7f7f_ffff)).collect();
    let tensor = Tensor::matrix(Role::Logits, 7, 13, values).map_err(|e| e.to_string())?;
    let tpath = root.join("t.cal");
    write_tensor(&tensor, &tpath).map_err(|e| e.to_string())?;
    let first = fs::read(&tpath).unwrap();
    let back = read_tensor(&tpath).map_err(|e| e.to_string())?;
    if back != tensor {
        return Err("tensor changed on read".into());
    }
    write_tensor(&back, &tpath).map_err(|e| e.to_string())?;
    if fs::read(&tpath).unwrap() != first {
        return Err("tensor bytes changed on rewrite".into());
    }

    let mut report = Report::new(&Provenance::new(
        vec![InputDigest::of_file(&tpath).map_err(|e| e.to_string())?],
        serde_json::json!({"check": "round trip"}),
    ));
    let set = synth::generate(&SynthConfig::new(300, 3, 0.5, 1)).unwrap();
    report
        .set_reliability(&[("confidence", &bin_confidence(&set, BinningConfig::default()))])
        .map_err(|e| e.to_string())?;
    let rpath = root.join("r.json");
    write_report(&report, &rpath).map_err(|e| e.to_string())?;
    let first = fs::read(&rpath).unwrap();
    write_report(&read_report(&rpath).map_err(|e| e.to_string())?, &rpath).map_err(|e| e.to_string())?;
    if fs::read(&rpath).unwrap() != first {
        return Err("report bytes changed on rewrite".into());
    }

    let p = |name: &str| root.join(name).to_string_lossy().into_owned();
    let mut compared = 0;
    for run in ["a", "b"] {
        let o = |name: &str| p(&format!("{name}_{run}"));
        run_cli(&["synth", "--n", "400", "--k", "4", "--seed", "9", "--distortion", "2", "--out", &o("synth")])?;
        run_cli(&["synth", "--n", "400", "--k", "4", "--seed", "10", "--skew", "high-confidence", "--out", &o("member")])?;
        let logits = format!("{}/logits.cal", p("synth_a"));
        let labels = format!("{}/labels.cal", p("synth_a"));
        let member = format!("{}/logits.cal", p("member_a"));
        run_cli(&["report", "--inputs", &logits, &labels, "--format", "json+svg", "--out", &o("report")])?;
        run_cli(&["sweep", "--inputs", &logits, &labels, "--class", "all", "--format", "json+svg", "--out", &o("sweep")])?;
        run_cli(&["ause", "--inputs", &logits, &labels, "--sorter", "ce", "--format", "json+svg", "--out", &o("ause")])?;
        run_cli(&["decompose", "--inputs", &logits, &member, &labels, "--per-instance", "--out", &o("decompose")])?;
        let rep = format!("{}/report.json", p("report_a"));
        let aus = format!("{}/ause.json", p("ause_a"));
        let swp = format!("{}/sweep.json", p("sweep_a"));
        run_cli(&["plot", "--inputs", &rep, "--kind", "reliability", "--out", &o("plot")])?;
        run_cli(&["plot", "--inputs", &rep, "--kind", "sparsification", "--out", &o("plot")])?;
        run_cli(&["plot", "--inputs", &swp, "--kind", "loss-surface", "--out", &o("plot")])?;
        run_cli(&["plot", "--inputs", &aus, &aus, "--kind", "ause-over-runs", "--out", &o("plot")])?;
    }
    for cmd in ["synth", "member", "report", "sweep", "ause", "decompose", "plot"] {
        let a = dir_bytes(&root.join(format!("{cmd}_a")));
        let b = dir_bytes(&root.join(format!("{cmd}_b")));
        if a.is_empty() || a != b {
            return Err(format!("`{cmd}` outputs differ between runs"));
        }
        compared += a.len();
    }
    Ok(format!("tensor and report rewrites bit-identical; {compared} CLI output files identical across two runs"))
}

fn determinism() -> Outcome {
    match round_trips_and_determinism() {
        Ok(msg) => outcome(true, msg),
        Err(msg) => outcome(false, msg),
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "entropy range", entropy_bracket),
        (2, "argmax invariance", argmax_invariance),
        (3, "decomposition identity", decomposition_identity),
        (4, "oracle optimality", oracle_optimality),
        (5, "brute-force metric oracles", brute_force_oracles),
        (6, "statistical calibration", statistical_calibration),
        (7, "temperature recovery", temperature_recovery),
        (8, "decoupling existence", decoupling_existence),
        (9, "AUSE_CE monotone response", ause_ce_monotone),
        (10, "round trip and determinism", determinism),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed().as_secs_f64();
        let expected = EXPECTED_FAILURES.iter().find(|(i, _)| *i == id);
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!("{status} [{id:>2}] {name} ({elapsed:.2}s): {}", result.detail);
        if !result.pass {
            match expected {
                Some((_, why)) => println!("          expected failure: {why}"),
                None => unexpected += 1,
            }
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} acceptance criteria failed");
        std::process::exit(1);
    }
}
