//! CSV files of functional samples and report writers.
//!
//! A sample file has one header row of grid coordinates followed by one row
//! per curve. 1-D headers hold the locations `s_1,...,s_P`. 2-D headers hold
//! `x:y` pairs in row-major lattice order (`x` outer, `y` inner); the domain
//! boundary is the full rectangle. Values are written with 17 significant
//! digits, so a write-then-read round trip is bitwise exact.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Result, ScbError};
use crate::grid::{Grid, Grid1D, Grid2D};
use crate::sample::FunctionalSample;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(grid: &Grid) -> Vec<String> {
    match grid {
        Grid::One(g) => g.points().iter().map(|&s| fmt(s)).collect(),
        Grid::Two(g) => g
            .x()
            .iter()
            .flat_map(|&x| g.y().iter().map(move |&y| format!("{}:{}", fmt(x), fmt(y))))
            .collect(),
    }
}

pub fn write_sample_to<W: Write>(sample: &FunctionalSample, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(sample.grid())).map_err(csv_err)?;
    for row in sample.rows() {
        w.write_record(row.iter().map(|&v| fmt(v))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sample(path: impl AsRef<Path>, sample: &FunctionalSample) -> Result<()> {
    write_sample_to(sample, BufWriter::new(File::create(path)?))
}

fn csv_err(e: csv::Error) -> ScbError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ScbError::Io(io),
        kind => ScbError::Parse { line, message: format!("{kind:?}") },
    }
}

fn parse_num(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| ScbError::Parse { line, message: format!("{field:?}: {e}") })
}

fn parse_header(fields: &[&str]) -> Result<Grid> {
    if fields.is_empty() {
        return Err(ScbError::Parse { line: 1, message: "empty header".into() });
    }
    let two_d = fields[0].contains(':');
    if !two_d {
        let pts = fields.iter().map(|f| parse_num(f, 1)).collect::<Result<Vec<_>>>()?;
        return Ok(Grid::One(Grid1D::new(pts)?));
    }
    let mut pairs = Vec::with_capacity(fields.len());
    for f in fields {
        let (a, b) = f.split_once(':').ok_or_else(|| ScbError::Parse {
            line: 1,
            message: format!("expected an x:y pair, got {f:?}"),
        })?;
        pairs.push((parse_num(a, 1)?, parse_num(b, 1)?));
    }
    // y varies fastest: the y axis is the run of pairs sharing the first x
    let ny = pairs.iter().take_while(|p| p.0 == pairs[0].0).count();
    if pairs.len() % ny != 0 {
        return Err(ScbError::Parse { line: 1, message: "header is not a full lattice".into() });
    }
    let nx = pairs.len() / ny;
    let y: Vec<f64> = pairs[..ny].iter().map(|p| p.1).collect();
    let x: Vec<f64> = (0..nx).map(|i| pairs[i * ny].0).collect();
    for (k, &(px, py)) in pairs.iter().enumerate() {
        if px != x[k / ny] || py != y[k % ny] {
            return Err(ScbError::Parse {
                line: 1,
                message: format!("header entry {} breaks row-major lattice order", k + 1),
            });
        }
    }
    Ok(Grid::Two(Grid2D::new(x, y)?))
}

pub fn read_sample_from<R: Read>(input: R) -> Result<FunctionalSample> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut records = r.records();
    let head = records
        .next()
        .ok_or(ScbError::Parse { line: 1, message: "file is empty".into() })?
        .map_err(csv_err)?;
    let fields: Vec<&str> = head.iter().collect();
    let grid = parse_header(&fields)?;
    let p = grid.len();
    let mut values = Vec::new();
    let mut n = 0;
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|q| q.line() as usize).unwrap_or(n + 2);
        if rec.len() != p {
            return Err(ScbError::Parse {
                line,
                message: format!("row has {} fields, header has {p}", rec.len()),
            });
        }
        for (col, f) in rec.iter().enumerate() {
            let v = parse_num(f, line)?;
            if !v.is_finite() {
                return Err(ScbError::NonFinite { row: n, col });
            }
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(ScbError::EmptySample);
    }
    FunctionalSample::from_flat(n, values, grid)
}

pub fn read_sample(path: impl AsRef<Path>) -> Result<FunctionalSample> {
    read_sample_from(File::open(path)?)
}

/// One CSV row per serialized record, header from the field names.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
