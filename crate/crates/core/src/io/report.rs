//! JSON reports.
//!
//! A report is a canonical JSON object with a mandatory `provenance` section
//! plus any of `metrics`, `reliability`, `sparsification`, `sweep`,
//! `classwise`, `decomposition` and free-form sections. Every number is
//! checked for finiteness on the way in.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::json::{num, nums, to_canonical_string};
use crate::config::TemperatureGrid;
use crate::decompose::DecompositionResult;
use crate::error::{Error, Result};
use crate::reliability::ReliabilityCurve;
use crate::sparsification::{AuseResult, CurveSeries};
use crate::temper::{ClasswiseTable, Metric, PairGap, SweepResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

impl InputDigest {
    /// Digest of a file's bytes, named by its final path component so reports
    /// do not depend on the working directory.
    pub fn of_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Ok(Self {
            name,
            sha256: sha256_hex(&super::read_bytes(path)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub inputs: Vec<InputDigest>,
    pub config: Value,
    pub tool_version: String,
    pub prng: Option<String>,
}

impl Provenance {
    pub fn new(inputs: Vec<InputDigest>, config: Value) -> Self {
        Self {
            inputs,
            config,
            tool_version: TOOL_VERSION.to_string(),
            prng: None,
        }
    }

    pub fn with_prng(mut self, id: &str) -> Self {
        self.prng = Some(id.to_string());
        self
    }

    fn to_value(&self) -> Value {
        json!({
            "config": self.config,
            "inputs": self.inputs.iter().map(|d| json!({"name": d.name, "sha256": d.sha256})).collect::<Vec<_>>(),
            "prng": self.prng,
            "tool_version": self.tool_version,
        })
    }
}

fn curve_value(c: &ReliabilityCurve) -> Result<Value> {
    let bins = c
        .bins
        .iter()
        .map(|b| {
            Ok(json!({
                "count": b.count,
                "empty": b.empty,
                "hi": num(b.hi, "bin edge")?,
                "lo": num(b.lo, "bin edge")?,
                "mean_measure": num(b.mean_measure, "bin mean")?,
                "outcome_rate": num(b.outcome_rate, "bin rate")?,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let skewness = match c.skewness {
        Some(s) => num(s, "skewness")?,
        None => Value::Null,
    };
    Ok(json!({"bins": bins, "mode": c.mode.as_str(), "skewness": skewness}))
}

fn series_value(s: &CurveSeries) -> Result<Value> {
    Ok(json!({
        "fractions": nums(&s.fractions, "removal fraction")?,
        "merit": s.merit_kind.as_str(),
        "values": nums(&s.values, "curve value")?,
    }))
}

fn ause_value(r: &AuseResult) -> Result<Value> {
    Ok(json!({
        "ause": num(r.ause, "ause")?,
        "class_id": r.class_id,
        "error": nums(&r.error_curve(), "sparsification error")?,
        "method": series_value(&r.method)?,
        "negative_area_flag": r.negative_area_flag,
        "oracle": series_value(&r.oracle)?,
        "sorter": r.sorter_kind.as_str(),
    }))
}

fn metric_map<T>(
    m: &BTreeMap<Metric, T>,
    f: impl Fn(&T) -> Result<Value>,
) -> Result<Value> {
    let mut out = Map::new();
    for (k, v) in m {
        out.insert(k.as_str().to_string(), f(v)?);
    }
    Ok(Value::Object(out))
}

fn pair_value(p: &PairGap) -> Result<Value> {
    Ok(json!({
        "difference": num(p.difference, "temperature gap")?,
        "first": p.first.as_str(),
        "flagged": p.flagged,
        "index_distance": p.index_distance,
        "second": p.second.as_str(),
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    doc: Map<String, Value>,
}

impl Report {
    pub fn new(provenance: &Provenance) -> Self {
        let mut doc = Map::new();
        doc.insert("provenance".into(), provenance.to_value());
        Self { doc }
    }

    pub fn section(&self, name: &str) -> Option<&Value> {
        self.doc.get(name)
    }

    /// Adds or replaces a free-form section after checking its numbers.
    pub fn set_section(&mut self, name: &str, value: Value) -> Result<()> {
        check_finite(&value, name)?;
        self.doc.insert(name.to_string(), value);
        Ok(())
    }

    pub fn set_metrics(&mut self, metrics: &BTreeMap<String, f64>) -> Result<()> {
        let mut out = Map::new();
        for (k, &v) in metrics {
            out.insert(k.clone(), num(v, k)?);
        }
        self.set_section("metrics", Value::Object(out))
    }

    pub fn set_reliability(&mut self, curves: &[(&str, &ReliabilityCurve)]) -> Result<()> {
        let mut out = Map::new();
        for (name, curve) in curves {
            out.insert(name.to_string(), curve_value(curve)?);
        }
        self.set_section("reliability", Value::Object(out))
    }

    /// Sparsification results keyed by a caller-chosen name.
    pub fn set_sparsification(&mut self, results: &[(String, &AuseResult)]) -> Result<()> {
        let mut out = Map::new();
        for (name, r) in results {
            out.insert(name.clone(), ause_value(r)?);
        }
        self.set_section("sparsification", Value::Object(out))
    }

    pub fn set_sweep(
        &mut self,
        sweep: &SweepResult,
        decoupling: &BTreeMap<String, PairGap>,
    ) -> Result<()> {
        let mut pairs = Map::new();
        for (k, p) in decoupling {
            pairs.insert(k.clone(), pair_value(p)?);
        }
        let value = json!({
            "argmin_index": metric_map(&sweep.argmin_index, |&i| Ok(json!(i)))?,
            "argmin_t": metric_map(&sweep.argmin_t, |&t| num(t, "temperature"))?,
            "decoupling": pairs,
            "grid": nums(sweep.grid.values(), "temperature")?,
            "normalized": metric_map(&sweep.normalized, |v| nums(v, "normalized curve"))?,
            "values": metric_map(&sweep.metrics, |v| nums(v, "metric curve"))?,
        });
        self.set_section("sweep", value)
    }

    pub fn set_classwise(&mut self, table: &ClasswiseTable) -> Result<()> {
        let rows = table
            .rows
            .iter()
            .map(|r| {
                Ok(json!({
                    "argmin_t": metric_map(&r.argmin_t, |&t| num(t, "temperature"))?,
                    "class_id": r.class_id,
                    "count": r.count,
                    "name": r.name,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        let summary = table
            .summary
            .iter()
            .map(|g| {
                Ok(json!({
                    "classes": g.classes,
                    "group": g.group,
                    "metrics": metric_map(&g.metrics, |s| {
                        Ok(json!({"mean": num(s.mean, "mean")?, "std": num(s.std, "std")?}))
                    })?,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        self.set_section("classwise", json!({"rows": rows, "summary": summary}))
    }

    /// Mean decomposition, plus per-instance values when `per_instance`.
    pub fn set_decomposition(&mut self, d: &DecompositionResult, per_instance: bool) -> Result<()> {
        let mut value = json!({
            "means": {
                "aleatoric": num(d.means.aleatoric, "aleatoric")?,
                "epistemic": num(d.means.epistemic, "epistemic")?,
                "total": num(d.means.total, "total")?,
            },
            "normalized": d.normalized,
        });
        if per_instance {
            value["instances"] = json!({
                "aleatoric": nums(&d.aleatoric, "aleatoric")?,
                "epistemic": nums(&d.epistemic, "epistemic")?,
                "total": nums(&d.total, "total")?,
            });
        }
        self.set_section("decomposition", value)
    }

    pub fn to_value(&self) -> Value {
        Value::Object(self.doc.clone())
    }

    pub fn to_canonical_string(&self) -> Result<String> {
        to_canonical_string(&self.to_value())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(s)?;
        let Value::Object(doc) = value else {
            return Err(Error::Report("report is not a JSON object".into()));
        };
        if !doc.get("provenance").is_some_and(Value::is_object) {
            return Err(Error::Report("report has no provenance section".into()));
        }
        Ok(Self { doc })
    }
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Report(format!("missing field `{key}`")))
}

fn f64s(v: &Value) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::Report("expected a numeric array".into()))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| Error::Report("expected a number".into())))
        .collect()
}

fn text(v: &Value) -> Result<&str> {
    v.as_str().ok_or_else(|| Error::Report("expected a string".into()))
}

fn entries(v: Option<&Value>, section: &str) -> Result<Vec<(String, Value)>> {
    match v {
        Some(Value::Object(m)) => Ok(m.iter().map(|(k, v)| (k.clone(), v.clone())).collect()),
        _ => Err(Error::Report(format!("report has no `{section}` section"))),
    }
}

fn series_from(v: &Value) -> Result<CurveSeries> {
    Ok(CurveSeries {
        fractions: f64s(field(v, "fractions")?)?,
        values: f64s(field(v, "values")?)?,
        merit_kind: text(field(v, "merit")?)?.parse()?,
    })
}

fn metric_entries<T>(v: &Value, f: impl Fn(&Value) -> Result<T>) -> Result<BTreeMap<Metric, T>> {
    let Value::Object(m) = v else {
        return Err(Error::Report("expected an object keyed by metric".into()));
    };
    m.iter().map(|(k, v)| Ok((k.parse()?, f(v)?))).collect()
}

impl Report {
    /// Reliability curves stored in the report, by name.
    pub fn reliability_curves(&self) -> Result<Vec<(String, ReliabilityCurve)>> {
        entries(self.section("reliability"), "reliability")?
            .into_iter()
            .map(|(k, v)| Ok((k, serde_json::from_value(v)?)))
            .collect()
    }

    /// Sparsification results stored in the report, by name.
    pub fn sparsification_results(&self) -> Result<Vec<(String, AuseResult)>> {
        entries(self.section("sparsification"), "sparsification")?
            .into_iter()
            .map(|(k, v)| {
                let class_id = match field(&v, "class_id")? {
                    Value::Null => None,
                    c => Some(c.as_u64().ok_or_else(|| Error::Report("bad class id".into()))? as usize),
                };
                let result = AuseResult {
                    ause: field(&v, "ause")?.as_f64().ok_or_else(|| Error::Report("bad ause".into()))?,
                    oracle: series_from(field(&v, "oracle")?)?,
                    method: series_from(field(&v, "method")?)?,
                    sorter_kind: text(field(&v, "sorter")?)?.parse()?,
                    class_id,
                    negative_area_flag: field(&v, "negative_area_flag")?.as_bool().unwrap_or(false),
                };
                Ok((k, result))
            })
            .collect()
    }

    /// The sweep section as a [`SweepResult`].
    pub fn sweep_result(&self) -> Result<SweepResult> {
        let v = self
            .section("sweep")
            .ok_or_else(|| Error::Report("report has no `sweep` section".into()))?;
        let index = |x: &Value| {
            x.as_u64()
                .map(|i| i as usize)
                .ok_or_else(|| Error::Report("bad grid index".into()))
        };
        let t = |x: &Value| x.as_f64().ok_or_else(|| Error::Report("bad temperature".into()));
        Ok(SweepResult {
            grid: TemperatureGrid::new(f64s(field(v, "grid")?)?)?,
            metrics: metric_entries(field(v, "values")?, f64s)?,
            argmin_t: metric_entries(field(v, "argmin_t")?, t)?,
            argmin_index: metric_entries(field(v, "argmin_index")?, index)?,
            normalized: metric_entries(field(v, "normalized")?, f64s)?,
        })
    }
}

fn check_finite(v: &Value, context: &str) -> Result<()> {
    match v {
        Value::Number(n) if n.as_f64().is_some_and(|x| !x.is_finite()) => {
            Err(Error::Report(format!("non-finite number in {context}")))
        }
        Value::Array(items) => items.iter().try_for_each(|i| check_finite(i, context)),
        Value::Object(map) => map.values().try_for_each(|i| check_finite(i, context)),
        _ => Ok(()),
    }
}

pub fn write_report(report: &Report, path: impl AsRef<Path>) -> Result<()> {
    let text = report.to_canonical_string()?;
    super::write_bytes(path.as_ref(), text.as_bytes())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    let bytes = super::read_bytes(path.as_ref())?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))?;
    Report::from_json_str(&text)
}
