//! CSV formats: datasets (`f0,…,f{n-1}`) and attribution tables
//! (`row,expected_value,phi_0,…,phi_{n-1}`).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::analysis::AttributionTable;
use crate::attribution::Attribution;
use crate::error::{Error, Result};
use crate::model::FeatureVector;
use crate::scalar::{parse_rational, Scalar};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn csv_err(what: &str, e: csv::Error) -> Error {
    Error::Csv(format!("{what}: {e}"))
}

/// Reads a dataset whose rows must have exactly `num_features` columns.
pub fn read_dataset_from<R: Read>(reader: R, num_features: usize) -> Result<Vec<FeatureVector>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header_len = rdr.headers().map_err(|e| csv_err("dataset header", e))?.len();
    if header_len != num_features {
        return Err(Error::Dimension { expected: num_features, got: header_len });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(&format!("dataset row {i}"), e))?;
        if rec.len() != num_features {
            return Err(Error::Dimension { expected: num_features, got: rec.len() });
        }
        let values = rec
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Csv(format!("dataset row {i}, column {j}: `{field}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureVector::new(values).map_err(|e| Error::Csv(format!("dataset row {i}: {e}")))?);
    }
    Ok(rows)
}

pub fn read_dataset(path: &Path, num_features: usize) -> Result<Vec<FeatureVector>> {
    read_dataset_from(open(path)?, num_features)
}

pub fn dataset_csv(rows: &[FeatureVector], num_features: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((0..num_features).map(|j| format!("f{j}"))).expect("in-memory write");
    for r in rows {
        w.write_record(r.values().iter().map(f64::to_string)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Attribution table in CSV form; values use [`Scalar::to_text`].
pub fn attribution_csv<T: Scalar>(rows: &[Attribution<T>], num_features: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["row".to_string(), "expected_value".to_string()]
        .into_iter()
        .chain((0..num_features).map(|j| format!("phi_{j}")));
    w.write_record(header).expect("in-memory write");
    for (i, a) in rows.iter().enumerate() {
        let fields =
            [i.to_string(), a.expected_value.to_text()].into_iter().chain(a.values.iter().map(Scalar::to_text));
        w.write_record(fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

fn parse_value(field: &str) -> Option<f64> {
    field.parse::<f64>().ok().or_else(|| parse_rational(field).map(|r| r.to_f64()))
}

/// Reads an attribution CSV; values may be decimal or `p/q`.
pub fn read_attribution_table_from<R: Read>(reader: R, method: &str) -> Result<AttributionTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err("attribution header", e))?.clone();
    if headers.len() < 2 || &headers[0] != "row" || &headers[1] != "expected_value" {
        return Err(Error::Csv("attribution header must start with `row,expected_value`".into()));
    }
    let n = headers.len() - 2;
    let (mut ev, mut rows) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(&format!("attribution row {i}"), e))?;
        let parsed = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, f)| {
                parse_value(f).ok_or_else(|| Error::Csv(format!("attribution row {i}, column {}: `{f}`", j + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if parsed.len() != n + 1 {
            return Err(Error::Csv(format!("attribution row {i} has {} fields, expected {}", rec.len(), n + 2)));
        }
        ev.push(parsed[0]);
        rows.push(parsed[1..].to_vec());
    }
    AttributionTable::new(method, ev, rows)
}

pub fn read_attribution_table(path: &Path) -> Result<AttributionTable> {
    let label = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    read_attribution_table_from(open(path)?, &label)
}

/// Writes `contents` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|source| Error::Io { path: p.to_owned(), source }),
        None => std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    }
}
