//! Deterministic SVG figures on a fixed 800x600 canvas.
//!
//! Coordinates are printed with two decimals and elements are emitted in
//! data order, so equal inputs give equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::reliability::{BinMode, ReliabilityCurve};
use crate::sparsification::AuseResult;
use crate::temper::SweepResult;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 760.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 530.0;
const PALETTE: [&str; 9] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    Reliability,
    Sparsification,
    LossSurface,
    AuseOverRuns,
}

impl FigureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Reliability => "reliability",
            Self::Sparsification => "sparsification",
            Self::LossSurface => "loss_surface",
            Self::AuseOverRuns => "ause_over_runs",
        }
    }
}

/// One named series of AUSE values, one value per run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub enum Figure<'a> {
    Reliability(&'a ReliabilityCurve),
    Sparsification(&'a AuseResult),
    LossSurface(&'a SweepResult),
    AuseOverRuns(&'a [RunSeries]),
}

impl Figure<'_> {
    pub fn kind(&self) -> FigureKind {
        match self {
            Self::Reliability(_) => FigureKind::Reliability,
            Self::Sparsification(_) => FigureKind::Sparsification,
            Self::LossSurface(_) => FigureKind::LossSurface,
            Self::AuseOverRuns(_) => FigureKind::AuseOverRuns,
        }
    }
}

/// Linear map from data ranges onto the plot area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (RIGHT - LEFT)
    }

    fn py(&self, y: f64) -> f64 {
        BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (BOTTOM - TOP)
    }

    fn points(&self, xs: &[f64], ys: &[f64]) -> String {
        let mut s = String::new();
        for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", self.px(x), self.py(y));
        }
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn open(title: &str, frame: &Frame, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(s, r##"<rect class="background" x="0" y="0" width="{WIDTH:.0}" height="{HEIGHT:.0}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text class="title" x="{:.2}" y="30" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<path class="axis" d="M{LEFT:.2},{TOP:.2} L{LEFT:.2},{BOTTOM:.2} L{RIGHT:.2},{BOTTOM:.2}" fill="none" stroke="#000000"/>"##
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let xv = frame.x.0 + f * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + f * (frame.y.1 - frame.y.0);
        let (xp, yp) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            BOTTOM + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            yp + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 45.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text class="ylabel" x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        escape(y_label)
    );
    s
}

fn legend(s: &mut String, idx: usize, name: &str, color: &str) {
    let y = TOP + 10.0 + 18.0 * idx as f64;
    let _ = writeln!(
        s,
        r#"<line class="legend" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
        RIGHT - 150.0,
        RIGHT - 125.0
    );
    let _ = writeln!(
        s,
        r#"<text class="legend" x="{:.2}" y="{:.2}">{}</text>"#,
        RIGHT - 118.0,
        y + 4.0,
        escape(name)
    );
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn check(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::NoData);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Report(format!("{what} contains non-finite values")));
    }
    Ok(())
}

fn reliability(curve: &ReliabilityCurve) -> Result<String> {
    if curve.populated().next().is_none() {
        return Err(Error::NoData);
    }
    let frame = Frame::new((0.0, 1.0), (0.0, 1.0));
    let (title, x, y) = match curve.mode {
        BinMode::Confidence => ("Reliability (confidence)", "confidence", "accuracy"),
        BinMode::Uncertainty => ("Reliability (uncertainty)", "normalized entropy", "error rate"),
    };
    let mut s = open(title, &frame, x, y);
    for b in curve.populated() {
        let x0 = frame.px(b.lo);
        let x1 = frame.px(b.hi);
        let top = frame.py(b.outcome_rate);
        let _ = writeln!(
            s,
            r##"<rect class="bar" x="{x0:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#1f77b4" fill-opacity="0.7" stroke="#0b3c5d" data-count="{}"/>"##,
            x1 - x0,
            BOTTOM - top,
            b.count
        );
    }
    let _ = writeln!(
        s,
        r##"<line class="diagonal" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555555" stroke-dasharray="6 4"/>"##,
        frame.px(0.0),
        frame.py(0.0),
        frame.px(1.0),
        frame.py(1.0)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn sparsification(r: &AuseResult) -> Result<String> {
    check(&r.oracle.values, "oracle curve")?;
    check(&r.method.values, "method curve")?;
    let xs = &r.oracle.fractions;
    let (lo, hi) = range(r.oracle.values.iter().chain(&r.method.values).copied());
    let frame = Frame::new((0.0, xs[xs.len() - 1].max(1e-9)), (lo, hi));
    let title = format!("Sparsification ({}), AUSE = {:.4}", r.sorter_kind.as_str(), r.ause);
    let mut s = open(&title, &frame, "fraction removed", r.oracle.merit_kind.as_str());
    let mut area = frame.points(xs, &r.oracle.values);
    let back: Vec<usize> = (0..xs.len()).rev().collect();
    let bx: Vec<f64> = back.iter().map(|&i| xs[i]).collect();
    let by: Vec<f64> = back.iter().map(|&i| r.method.values[i]).collect();
    area.push(' ');
    area.push_str(&frame.points(&bx, &by));
    let _ = writeln!(
        s,
        r##"<polygon class="error-area" points="{area}" fill="#d62728" fill-opacity="0.25" stroke="none"/>"##
    );
    for (i, (name, series)) in [("oracle", &r.oracle), ("method", &r.method)].into_iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<polyline class="{name}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            frame.points(&series.fractions, &series.values),
            PALETTE[i]
        );
        legend(&mut s, i, name, PALETTE[i]);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn loss_surface(r: &SweepResult) -> Result<String> {
    let grid = r.grid.values();
    check(grid, "temperature grid")?;
    let frame = Frame::new((grid[0], grid[grid.len() - 1]), (0.0, 1.0));
    let mut s = open("Normalized calibration loss surface", &frame, "temperature", "normalized value");
    for (i, (metric, values)) in r.normalized.iter().enumerate() {
        check(values, metric.as_str())?;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<polyline class="metric" data-metric="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            metric.as_str(),
            frame.points(grid, values)
        );
        let best = r.argmin_index[metric];
        let _ = writeln!(
            s,
            r#"<circle class="argmin" data-metric="{}" cx="{:.2}" cy="{:.2}" r="5" fill="{color}"/>"#,
            metric.as_str(),
            frame.px(grid[best]),
            frame.py(values[best])
        );
        legend(&mut s, i, &format!("{} (T = {})", metric.as_str(), tick_label(grid[best])), color);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn ause_over_runs(series: &[RunSeries]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::NoData);
    }
    for r in series {
        check(&r.values, &r.name)?;
    }
    let runs = series.iter().map(|r| r.values.len()).max().unwrap_or(1);
    let (lo, hi) = range(series.iter().flat_map(|r| r.values.iter().copied()));
    let frame = Frame::new((0.0, (runs.max(2) - 1) as f64), (lo.min(0.0), hi));
    let mut s = open("AUSE over runs", &frame, "run", "AUSE");
    for (i, r) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let xs: Vec<f64> = (0..r.values.len()).map(|j| j as f64).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-series="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(&r.name),
            frame.points(&xs, &r.values)
        );
        for (x, y) in xs.iter().zip(&r.values) {
            let _ = writeln!(
                s,
                r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                frame.px(*x),
                frame.py(*y)
            );
        }
        legend(&mut s, i, &r.name, color);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_svg(figure: &Figure) -> Result<String> {
    match figure {
        Figure::Reliability(c) => reliability(c),
        Figure::Sparsification(r) => sparsification(r),
        Figure::LossSurface(r) => loss_surface(r),
        Figure::AuseOverRuns(s) => ause_over_runs(s),
    }
}

pub fn write_svg(figure: &Figure, path: impl AsRef<Path>) -> Result<()> {
    let svg = render_svg(figure)?;
    super::write_bytes(path.as_ref(), svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BinningConfig, SparsificationConfig, TemperatureGrid};
    use crate::prediction::{Matrix, PredictionSet};
    use crate::reliability::bin_confidence;
    use crate::sparsification::{ause, MeritKind, SorterKind};
    use crate::temper::{sweep, Metric, SweepOptions};

    fn count(svg: &str, needle: &str) -> usize {
        svg.matches(needle).count()
    }

    fn set() -> PredictionSet {
        PredictionSet::from_logits(
            Matrix::from_rows(&[[2.0, 0.1], [0.3, 0.2], [-1.0, 1.5], [0.0, 3.0], [0.2, 0.0]]).unwrap(),
            vec![0, 1, 1, 1, 0],
        )
        .unwrap()
    }

    #[test]
    fn one_bar_per_populated_bin_plus_diagonal() {
        // Confidences 0.55, 0.62 and 0.95 fill three of five bins.
        let s = PredictionSet::from_probs(
            Matrix::from_rows(&[[0.55, 0.45], [0.38, 0.62], [0.95, 0.05], [0.9600, 0.0400]]).unwrap(),
            vec![0, 0, 0, 1],
        )
        .unwrap();
        let curve = bin_confidence(&s, BinningConfig::new(5).unwrap());
        assert_eq!(curve.populated().count(), 3);
        let svg = render_svg(&Figure::Reliability(&curve)).unwrap();
        assert_eq!(count(&svg, "<rect class=\"bar\""), 3);
        assert_eq!(count(&svg, "class=\"diagonal\""), 1);
        assert!(svg.contains("width=\"800\" height=\"600\""));
    }

    #[test]
    fn loss_surface_marks_each_metric() {
        let grid = TemperatureGrid::range(0.5, 3.0, 0.5).unwrap();
        let r = sweep(&set(), &grid, &[Metric::Nll, Metric::Ccqs], &SweepOptions::default()).unwrap();
        let svg = render_svg(&Figure::LossSurface(&r)).unwrap();
        assert_eq!(count(&svg, "<polyline class=\"metric\""), 2);
        assert_eq!(count(&svg, "<circle class=\"argmin\""), 2);
        assert!(svg.contains("data-metric=\"nll\"") && svg.contains("data-metric=\"ccqs\""));
    }

    #[test]
    fn deterministic_output() {
        let a = ause(&set(), SorterKind::VariationRatio, MeritKind::Accuracy, SparsificationConfig::new(5, 0.8).unwrap(), None)
            .unwrap();
        let fig = Figure::Sparsification(&a);
        let first = render_svg(&fig).unwrap();
        assert_eq!(render_svg(&fig).unwrap(), first);
        assert_eq!(count(&first, "class=\"error-area\""), 1);
        let runs = vec![RunSeries { name: "ce".into(), values: vec![0.3, 0.2, 0.15] }];
        let svg = render_svg(&Figure::AuseOverRuns(&runs)).unwrap();
        assert_eq!(count(&svg, "<circle class=\"point\""), 3);
        assert_eq!(Figure::AuseOverRuns(&runs).kind().as_str(), "ause_over_runs");
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(render_svg(&Figure::AuseOverRuns(&[])), Err(Error::NoData)));
        let bad = vec![RunSeries { name: "x".into(), values: vec![f64::NAN] }];
        assert!(render_svg(&Figure::AuseOverRuns(&bad)).is_err());
    }
}
