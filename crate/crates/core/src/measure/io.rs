//! Point-cloud files.
//!
//! CSV: a header row with columns `x1..xd` and an optional `weight` column.
//! JSON: an array of records with the same keys. Missing weights default to
//! `1/N`. The writers always emit the weight column.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde_json::{Map, Value};

use super::WeightedPointMeasure;
use crate::error::{Error, Result};

fn coord_index(name: &str) -> Option<usize> {
    name.strip_prefix('x')?.parse::<usize>().ok().filter(|&i| i >= 1)
}

pub fn read_csv<R: Read>(reader: R) -> Result<WeightedPointMeasure> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut coord_cols: BTreeMap<usize, usize> = BTreeMap::new();
    let mut weight_col = None;
    for (col, name) in headers.iter().enumerate() {
        if name == "weight" {
            weight_col = Some(col);
        } else if let Some(i) = coord_index(name) {
            if coord_cols.insert(i, col).is_some() {
                return Err(Error::Parse(format!("duplicate column {name}")));
            }
        } else {
            return Err(Error::Parse(format!("unexpected column {name:?}")));
        }
    }
    let dim = coord_cols.len();
    if dim == 0 || coord_cols.keys().copied().ne(1..=dim) {
        return Err(Error::Parse("header must name columns x1..xd".into()));
    }
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for &col in coord_cols.values() {
            coords.push(parse_field(&record, col, row)?);
        }
        if let Some(col) = weight_col {
            weights.push(parse_field(&record, col, row)?);
        }
    }
    finish(dim, coords, weights, weight_col.is_some())
}

fn parse_field(record: &csv::StringRecord, col: usize, row: usize) -> Result<f64> {
    let raw = record.get(col).ok_or_else(|| Error::Parse(format!("row {}: missing column {col}", row + 1)))?;
    raw.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: {raw:?} is not a number", row + 1)))
}

fn finish(dim: usize, coords: Vec<f64>, mut weights: Vec<f64>, weighted: bool) -> Result<WeightedPointMeasure> {
    let n = coords.len() / dim;
    if n == 0 {
        return Err(Error::Parse("no atoms".into()));
    }
    if !weighted {
        weights = vec![1.0 / n as f64; n];
    }
    WeightedPointMeasure::from_flat(dim, coords, weights)
}

pub fn read_json<R: Read>(reader: R) -> Result<WeightedPointMeasure> {
    let records: Vec<Map<String, Value>> = serde_json::from_reader(reader)?;
    let first = records.first().ok_or_else(|| Error::Parse("no atoms".into()))?;
    let dim = first.keys().filter(|k| coord_index(k).is_some()).count();
    if dim == 0 {
        return Err(Error::Parse("records must carry keys x1..xd".into()));
    }
    let weighted = first.contains_key("weight");
    let mut coords = Vec::with_capacity(records.len() * dim);
    let mut weights = Vec::with_capacity(records.len());
    for (row, rec) in records.iter().enumerate() {
        if rec.len() != dim + usize::from(weighted) {
            return Err(Error::Parse(format!("record {row} has a different set of keys")));
        }
        for i in 1..=dim {
            let v = rec
                .get(&format!("x{i}"))
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("record {row}: x{i} missing or not a number")))?;
            coords.push(v);
        }
        if weighted {
            let w = rec
                .get("weight")
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("record {row}: weight missing or not a number")))?;
            weights.push(w);
        }
    }
    finish(dim, coords, weights, weighted)
}

pub fn write_csv<W: Write>(mu: &WeightedPointMeasure, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=mu.dim()).map(|i| format!("x{i}")).collect();
    header.push("weight".into());
    wtr.write_record(&header)?;
    for (p, w) in mu.points().zip(mu.weights()) {
        let mut row: Vec<String> = p.iter().map(|c| format_float(*c)).collect();
        row.push(format_float(*w));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mu: &WeightedPointMeasure, writer: W) -> Result<()> {
    let records: Vec<Map<String, Value>> = mu
        .points()
        .zip(mu.weights())
        .map(|(p, w)| {
            let mut rec = Map::new();
            for (i, c) in p.iter().enumerate() {
                rec.insert(format!("x{}", i + 1), Value::from(*c));
            }
            rec.insert("weight".into(), Value::from(*w));
            rec
        })
        .collect();
    serde_json::to_writer_pretty(writer, &records)?;
    Ok(())
}

// Shortest representation that round-trips.
fn format_float(x: f64) -> String {
    format!("{x:?}")
}

/// Load a point cloud, choosing the format from the file extension
/// (`.json` for JSON, anything else is read as CSV).
pub fn load(path: &Path) -> Result<WeightedPointMeasure> {
    let file = File::open(path)?;
    if is_json(path) {
        read_json(file)
    } else {
        read_csv(file)
    }
}

pub fn save(mu: &WeightedPointMeasure, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    if is_json(path) {
        write_json(mu, file)
    } else {
        write_csv(mu, file)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
