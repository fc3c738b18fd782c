//! CSV ingestion and output of point sets.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Reads one point per row. A first row with no numeric field is taken as a
/// header. With `normalize`, every column is min-max scaled to `[0,1]`
/// (constant columns map to 0.5); otherwise values outside `[0,1]` are rejected.
pub fn read_csv<R: Read>(reader: R, normalize: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut dim = None;
    let mut coords = Vec::new();
    let mut lines = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> = rec.iter().map(str::parse::<f64>).collect();
        if dim.is_none() && coords.is_empty() && parsed.iter().all(|v| v.is_err()) {
            continue;
        }
        let d = *dim.get_or_insert(rec.len());
        if rec.len() != d {
            return Err(Error::MalformedRow { line, message: format!("expected {d} columns, found {}", rec.len()) });
        }
        for (col, v) in parsed.into_iter().enumerate() {
            match v {
                Ok(x) if x.is_finite() => coords.push(x),
                _ => {
                    return Err(Error::MalformedRow {
                        line,
                        message: format!("column {} is not a finite number: {:?}", col + 1, &rec[col]),
                    })
                }
            }
        }
        lines.push(line);
    }
    let dim = dim.ok_or(Error::EmptyInput)?;
    if normalize {
        for a in 0..dim {
            let col = coords.iter().skip(a).step_by(dim);
            let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
            for x in coords.iter_mut().skip(a).step_by(dim) {
                *x = if hi > lo { ((*x - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
            }
        }
    } else if let Some(k) = coords.iter().position(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::MalformedRow {
            line: lines[k / dim],
            message: format!("column {} value {} lies outside [0, 1]; pass --normalize to rescale", k % dim + 1, coords[k]),
        });
    }
    Dataset::from_flat(dim, coords)
}

pub fn read_csv_file(path: &Path, normalize: bool) -> Result<Dataset> {
    read_csv(BufReader::new(File::open(path)?), normalize)
}

/// One row per point, shortest round-trip float formatting, no header.
pub fn write_csv<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let mut row: Vec<String> = Vec::with_capacity(data.dim());
    for p in data.points() {
        row.clear();
        row.extend(p.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, data: &Dataset) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), data)
}
