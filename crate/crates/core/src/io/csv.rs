//! CSV prediction tables: a `label` column followed by `p0..p{K-1}`
//! (probabilities) or `l0..l{K-1}` (logits).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::prediction::{Matrix, PredictionSet, RawPredictions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Columns {
    Probs,
    Logits,
}

fn parse_header(fields: &csv::StringRecord) -> Result<(Columns, usize)> {
    let unknown = || Error::UnknownHeader(fields.iter().collect::<Vec<_>>().join(","));
    let mut it = fields.iter();
    if it.next().map(str::trim) != Some("label") {
        return Err(unknown());
    }
    let rest: Vec<&str> = it.map(str::trim).collect();
    let kind = match rest.first().and_then(|c| c.chars().next()) {
        Some('p') => Columns::Probs,
        Some('l') => Columns::Logits,
        _ => return Err(unknown()),
    };
    let prefix = if kind == Columns::Probs { "p" } else { "l" };
    if rest.len() < 2 || rest.iter().enumerate().any(|(i, c)| *c != format!("{prefix}{i}")) {
        return Err(unknown());
    }
    Ok((kind, rest.len()))
}

fn number<T: std::str::FromStr>(cell: &str, line: usize) -> Result<T> {
    cell.trim().parse().map_err(|_| Error::NonNumericCell {
        line,
        cell: cell.to_string(),
    })
}

pub fn read_csv_from(reader: impl Read) -> Result<PredictionSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let (kind, k) = parse_header(rdr.headers()?)?;
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != k + 1 {
            return Err(Error::RaggedRows {
                line,
                expected: k + 1,
                found: record.len(),
            });
        }
        labels.push(number::<i64>(&record[0], line)?);
        for cell in record.iter().skip(1) {
            values.push(number::<f64>(cell, line)?);
        }
    }
    let matrix = Matrix::new(labels.len(), k, values)?;
    PredictionSet::validate(match kind {
        Columns::Probs => RawPredictions::from_probs(matrix, labels),
        Columns::Logits => RawPredictions::from_logits(matrix, labels),
    })
}

pub fn read_csv_predictions(path: impl AsRef<Path>) -> Result<PredictionSet> {
    read_csv_from(super::read_bytes(path.as_ref())?.as_slice())
}

/// Writes probabilities with full round-trip precision.
pub fn write_csv_to(set: &PredictionSet, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["label".to_string()];
    header.extend((0..set.k()).map(|c| format!("p{c}")));
    w.write_record(&header)?;
    for (i, row) in set.rows().enumerate() {
        let mut rec = vec![set.labels()[i].to_string()];
        rec.extend(row.iter().map(|p| format!("{p:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
