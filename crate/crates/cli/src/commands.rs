use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use calimetr::io::{
    predictions_from_tensors, read_csv_predictions, read_report, read_tensor, write_report,
    write_svg, write_tensor, Figure, InputDigest, Provenance, Report, Role, RunSeries, Tensor,
};
use calimetr::reliability::{bin_confidence, bin_uncertainty};
use calimetr::sparsification::{ause, classwise_ause};
use calimetr::temper::{classwise_table, decoupling_report, evaluate, sweep};
use calimetr::{
    decompose, synth, AuseResult, BinningConfig, EnsemblePredictions, MeritKind, Metric,
    PredictionSet, SkewTarget, SorterKind, SparsificationConfig, SweepOptions, SynthConfig,
    TemperatureGrid,
};
use serde_json::{json, Value};

use crate::args::*;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag values; exit code 2.
    Usage(String),
    /// Unreadable, invalid or unwritable data; exit code 1.
    Data(calimetr::Error),
}

impl From<calimetr::Error> for CliError {
    fn from(e: calimetr::Error) -> Self {
        CliError::Data(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(r: calimetr::Result<T>) -> Result<T> {
    r.map_err(|e| CliError::Usage(e.to_string()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Report(a) => report(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Ause(a) => run_ause(a),
        Command::Decompose(a) => run_decompose(a),
        Command::Synth(a) => run_synth(a),
        Command::Plot(a) => plot(a),
    }
}

fn is_csv(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn digests(paths: &[PathBuf]) -> Result<Vec<InputDigest>> {
    Ok(paths.iter().map(InputDigest::of_file).collect::<calimetr::Result<_>>()?)
}

/// One prediction set from a single CSV or from tensor files whose header
/// roles say which file holds what.
fn load_set(paths: &[PathBuf]) -> Result<PredictionSet> {
    if paths.iter().any(|p| is_csv(p)) {
        return match paths {
            [one] => Ok(read_csv_predictions(one)?),
            _ => Err(CliError::Usage("a CSV input must be the only input".into())),
        };
    }
    let tensors = paths.iter().map(read_tensor).collect::<calimetr::Result<Vec<_>>>()?;
    Ok(predictions_from_tensors(&tensors)?)
}

fn load_members(paths: &[PathBuf]) -> Result<EnsemblePredictions> {
    let members = if paths.iter().all(|p| is_csv(p)) {
        paths.iter().map(read_csv_predictions).collect::<calimetr::Result<Vec<_>>>()?
    } else if paths.iter().any(|p| is_csv(p)) {
        return Err(CliError::Usage("do not mix CSV and tensor inputs".into()));
    } else {
        let tensors = paths.iter().map(read_tensor).collect::<calimetr::Result<Vec<_>>>()?;
        let (labels, scores): (Vec<Tensor>, Vec<Tensor>) =
            tensors.into_iter().partition(|t| t.role() == Role::Labels);
        let [labels] = labels.as_slice() else {
            return Err(CliError::Usage("expected exactly one labels tensor".into()));
        };
        scores
            .into_iter()
            .map(|s| predictions_from_tensors(&[labels.clone(), s]))
            .collect::<calimetr::Result<Vec<_>>>()?
    };
    if members.is_empty() {
        return Err(CliError::Usage("no ensemble members given".into()));
    }
    Ok(EnsemblePredictions::new(members)?)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| {
        CliError::Data(calimetr::Error::UnwritablePath {
            path: dir.to_path_buf(),
            source,
        })
    })
}

fn file_stem(key: &str) -> String {
    key.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn binning(b: &Binning) -> Result<BinningConfig> {
    usage(BinningConfig::new(b.bins))
}

fn sorter_kind(s: Sorter) -> SorterKind {
    match s {
        Sorter::Vr => SorterKind::VariationRatio,
        Sorter::Entropy => SorterKind::Entropy,
        Sorter::Ce => SorterKind::CrossEntropy,
    }
}

fn merit_kind(m: Merit) -> MeritKind {
    match m {
        Merit::Iou => MeritKind::Iou,
        Merit::Accuracy => MeritKind::Accuracy,
        Merit::Brier => MeritKind::Brier,
    }
}

fn sparsification(s: &Sparsify) -> Result<SparsificationConfig> {
    usage(SparsificationConfig::new(s.steps, s.max_fraction))
}

fn class_json(c: Option<ClassSel>) -> Value {
    match c {
        None => Value::Null,
        Some(ClassSel::All) => json!("all"),
        Some(ClassSel::Id(i)) => json!(i),
    }
}

fn sparsify_json(s: &Sparsify) -> Value {
    json!({
        "class": class_json(s.class),
        "max_fraction": s.max_fraction,
        "merit": merit_kind(s.merit).as_str(),
        "steps": s.steps,
    })
}

fn check_class(set: &PredictionSet, class: Option<ClassSel>) -> Result<()> {
    match class {
        Some(ClassSel::Id(c)) if c >= set.k() => Err(CliError::Usage(format!(
            "--class {c} is out of range for {} classes",
            set.k()
        ))),
        _ => Ok(()),
    }
}

/// AUSE results for a sorter: per class for IoU unless one class is picked,
/// a single class-free result for accuracy and Brier.
fn ause_results(
    set: &PredictionSet,
    sorter: SorterKind,
    merit: MeritKind,
    cfg: SparsificationConfig,
    class: Option<ClassSel>,
) -> Result<Vec<(String, AuseResult)>> {
    let results = match (merit, class) {
        (MeritKind::Iou, Some(ClassSel::Id(c))) => vec![ause(set, sorter, merit, cfg, Some(c))?],
        (MeritKind::Iou, _) => classwise_ause(set, sorter, merit, cfg)?,
        _ => vec![ause(set, sorter, merit, cfg, None)?],
    };
    Ok(results
        .into_iter()
        .map(|r| {
            let key = match r.class_id {
                Some(c) if merit == MeritKind::Iou => format!("{}/class_{c}", sorter.as_str()),
                _ => sorter.as_str().to_string(),
            };
            (key, r)
        })
        .collect())
}

fn write_sparsification_svgs(dir: &Path, results: &[(String, AuseResult)]) -> Result<()> {
    for (key, r) in results {
        let path = dir.join(format!("sparsification_{}.svg", file_stem(key)));
        write_svg(&Figure::Sparsification(r), path)?;
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let bins = binning(&a.binning)?;
    let cfg = sparsification(&a.sparsify)?;
    let set = load_set(&a.io.inputs)?;
    check_class(&set, a.sparsify.class)?;
    let merit = merit_kind(a.sparsify.merit);
    let opts = SweepOptions {
        binning: bins,
        sparsification: cfg,
        merit,
        holistic: a.holistic,
    };
    let config = json!({
        "bins": a.binning.bins,
        "command": "report",
        "holistic": a.holistic,
        "sparsification": sparsify_json(&a.sparsify),
        "temperature": 1,
    });
    let mut rep = Report::new(&Provenance::new(digests(&a.io.inputs)?, config));

    let values = evaluate(&set, &Metric::ALL, &opts)?;
    let mut metrics: BTreeMap<String, f64> = Metric::ALL
        .iter()
        .zip(values)
        .map(|(m, v)| (m.as_str().to_string(), v))
        .collect();
    metrics.insert("accuracy".into(), set.accuracy());
    let conf = bin_confidence(&set, bins);
    let unc = bin_uncertainty(&set, bins);
    if let Some(s) = conf.skewness {
        metrics.insert("skewness_confidence".into(), s);
    }
    if let Some(s) = unc.skewness {
        metrics.insert("skewness_uncertainty".into(), s);
    }
    rep.set_metrics(&metrics)?;
    rep.set_reliability(&[("confidence", &conf), ("uncertainty", &unc)])?;

    let mut curves = Vec::new();
    for sorter in [SorterKind::VariationRatio, SorterKind::Entropy, SorterKind::CrossEntropy] {
        curves.extend(ause_results(&set, sorter, merit, cfg, a.sparsify.class)?);
    }
    rep.set_sparsification(&curves.iter().map(|(k, r)| (k.clone(), r)).collect::<Vec<_>>())?;

    prepare_out(&a.io.out)?;
    write_report(&rep, a.io.out.join("report.json"))?;
    if a.io.format == Format::JsonSvg {
        write_svg(&Figure::Reliability(&conf), a.io.out.join("reliability_confidence.svg"))?;
        write_svg(&Figure::Reliability(&unc), a.io.out.join("reliability_uncertainty.svg"))?;
        write_sparsification_svgs(&a.io.out, &curves)?;
    }
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let bins = binning(&a.binning)?;
    let cfg = sparsification(&a.sparsify)?;
    let grid = usage(TemperatureGrid::range(a.temp_min, a.temp_max, a.temp_step))?;
    let metrics: Vec<Metric> = if a.metrics.is_empty() {
        Metric::ALL.to_vec()
    } else {
        usage(a.metrics.iter().map(|m| m.trim().parse()).collect())?
    };
    if a.group_size == 0 {
        return Err(CliError::Usage("--group-size must be at least 1".into()));
    }
    let set = load_set(&a.io.inputs)?;
    check_class(&set, a.sparsify.class)?;
    let opts = SweepOptions {
        binning: bins,
        sparsification: cfg,
        merit: merit_kind(a.sparsify.merit),
        holistic: a.holistic,
    };
    let config = json!({
        "bins": a.binning.bins,
        "command": "sweep",
        "group_size": a.group_size,
        "holistic": a.holistic,
        "metrics": metrics.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
        "sparsification": sparsify_json(&a.sparsify),
        "temperature": {"max": a.temp_max, "min": a.temp_min, "step": a.temp_step},
    });
    let mut rep = Report::new(&Provenance::new(digests(&a.io.inputs)?, config));
    let result = sweep(&set, &grid, &metrics, &opts)?;
    rep.set_sweep(&result, &decoupling_report(&result))?;
    if let Some(class) = a.sparsify.class {
        let mut table = classwise_table(&set, &grid, &metrics, &opts, a.group_size)?;
        if let ClassSel::Id(c) = class {
            table.rows.retain(|r| r.class_id == c);
            table.summary.clear();
        }
        rep.set_classwise(&table)?;
    }
    prepare_out(&a.io.out)?;
    write_report(&rep, a.io.out.join("sweep.json"))?;
    if a.io.format == Format::JsonSvg {
        write_svg(&Figure::LossSurface(&result), a.io.out.join("loss_surface.svg"))?;
    }
    Ok(())
}

fn run_ause(a: AuseArgs) -> Result<()> {
    let cfg = sparsification(&a.sparsify)?;
    let set = load_set(&a.io.inputs)?;
    check_class(&set, a.sparsify.class)?;
    let sorter = sorter_kind(a.sorter);
    let merit = merit_kind(a.sparsify.merit);
    let config = json!({
        "command": "ause",
        "sorter": sorter.as_str(),
        "sparsification": sparsify_json(&a.sparsify),
    });
    let mut rep = Report::new(&Provenance::new(digests(&a.io.inputs)?, config));
    let results = ause_results(&set, sorter, merit, cfg, a.sparsify.class)?;
    let mut metrics = BTreeMap::new();
    let mean = results.iter().map(|(_, r)| r.ause).sum::<f64>() / results.len() as f64;
    metrics.insert("ause".to_string(), mean);
    for (key, r) in &results {
        if let Some(c) = r.class_id.filter(|_| merit == MeritKind::Iou) {
            metrics.insert(format!("ause/class_{c}"), r.ause);
        } else if key != sorter.as_str() {
            metrics.insert(format!("ause/{key}"), r.ause);
        }
    }
    rep.set_metrics(&metrics)?;
    rep.set_sparsification(&results.iter().map(|(k, r)| (k.clone(), r)).collect::<Vec<_>>())?;
    prepare_out(&a.io.out)?;
    write_report(&rep, a.io.out.join("ause.json"))?;
    if a.io.format == Format::JsonSvg {
        write_sparsification_svgs(&a.io.out, &results)?;
    }
    Ok(())
}

fn run_decompose(a: DecomposeArgs) -> Result<()> {
    let ens = load_members(&a.io.inputs)?;
    let config = json!({
        "command": "decompose",
        "members": ens.len(),
        "normalized": !a.nats,
        "per_instance": a.per_instance,
    });
    let mut rep = Report::new(&Provenance::new(digests(&a.io.inputs)?, config));
    let d = decompose::decompose_with(&ens, !a.nats)?;
    rep.set_decomposition(&d, a.per_instance)?;
    let marginal = decompose::marginal(&ens)?;
    rep.set_metrics(&BTreeMap::from([
        ("accuracy".to_string(), marginal.accuracy()),
        ("nll".to_string(), calimetr::scores::nll(&marginal)),
    ]))?;
    prepare_out(&a.io.out)?;
    write_report(&rep, a.io.out.join("decompose.json"))?;
    Ok(())
}

fn run_synth(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n: a.n,
        k: a.k,
        concentration: a.concentration,
        distortion: a.distortion,
        seed: a.seed,
    };
    usage(cfg.validate())?;
    let set = match a.skew {
        None => synth::generate(&cfg)?,
        Some(Skew::HighConfidence) => synth::gen_skewed(&cfg, SkewTarget::HighConfidence)?,
        Some(Skew::HighUncertainty) => synth::gen_skewed(&cfg, SkewTarget::HighUncertainty)?,
    };
    let (scores, labels) = calimetr::io::prediction_tensors(&set)?;
    prepare_out(&a.out)?;
    let scores_path = a.out.join("logits.cal");
    let labels_path = a.out.join("labels.cal");
    write_tensor(&scores, &scores_path)?;
    write_tensor(&labels, &labels_path)?;
    let config = json!({
        "command": "synth",
        "concentration": a.concentration,
        "distortion": a.distortion,
        "k": a.k,
        "n": a.n,
        "seed": a.seed,
        "skew": match a.skew {
            None => Value::Null,
            Some(Skew::HighConfidence) => json!("high_confidence"),
            Some(Skew::HighUncertainty) => json!("high_uncertainty"),
        },
    });
    let mut rep = Report::new(&Provenance::new(Vec::new(), config).with_prng(synth::PRNG_ID));
    let outputs = [&scores_path, &labels_path]
        .iter()
        .map(|p| {
            let d = InputDigest::of_file(p)?;
            Ok((d.name, json!(d.sha256)))
        })
        .collect::<calimetr::Result<serde_json::Map<_, _>>>()?;
    rep.set_section("outputs", Value::Object(outputs))?;
    rep.set_metrics(&BTreeMap::from([("accuracy".to_string(), set.accuracy())]))?;
    write_report(&rep, a.out.join("synth.json"))?;
    Ok(())
}

fn plot(a: PlotArgs) -> Result<()> {
    let reports = a.inputs.iter().map(read_report).collect::<calimetr::Result<Vec<_>>>()?;
    prepare_out(&a.out)?;
    let prefix = |i: usize| if reports.len() > 1 { format!("{i}_") } else { String::new() };
    match a.kind {
        Kind::Reliability => {
            for (i, rep) in reports.iter().enumerate() {
                for (name, curve) in rep.reliability_curves()? {
                    let path = a.out.join(format!("{}reliability_{}.svg", prefix(i), file_stem(&name)));
                    write_svg(&Figure::Reliability(&curve), path)?;
                }
            }
        }
        Kind::Sparsification => {
            for (i, rep) in reports.iter().enumerate() {
                for (name, r) in rep.sparsification_results()? {
                    let path = a.out.join(format!("{}sparsification_{}.svg", prefix(i), file_stem(&name)));
                    write_svg(&Figure::Sparsification(&r), path)?;
                }
            }
        }
        Kind::LossSurface => {
            for (i, rep) in reports.iter().enumerate() {
                let path = a.out.join(format!("{}loss_surface.svg", prefix(i)));
                write_svg(&Figure::LossSurface(&rep.sweep_result()?), path)?;
            }
        }
        Kind::AuseOverRuns => {
            let mut series: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for rep in &reports {
                for (name, r) in rep.sparsification_results()? {
                    series.entry(name).or_default().push(r.ause);
                }
            }
            if series.values().any(|v| v.len() != reports.len()) {
                return Err(CliError::Data(calimetr::Error::Report(
                    "reports disagree on their sparsification results".into(),
                )));
            }
            let runs: Vec<RunSeries> = series
                .into_iter()
                .map(|(name, values)| RunSeries { name, values })
                .collect();
            write_svg(&Figure::AuseOverRuns(&runs), a.out.join("ause_over_runs.svg"))?;
        }
    }
    Ok(())
}

