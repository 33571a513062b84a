//! CSV and JSON file formats.
//!
//! * point patterns: `x,y,class`, plus a window sidecar
//!   `{"x0":…, "y0":…, "width":…, "height":…, "n_classes":…}`
//! * feature tables: `cell_index,class,f0,…,f{D-1}`
//! * predictions: `x,y,class,size` (`size` optional on input)
//! * K-vector fields: `cell_index,x,y,class,k{c}_r{r}…`
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! reading a written file reproduces the values exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::{Assignment, FeatureTable};
use crate::error::{Error, Result};
use crate::infer::Prediction;
use crate::pattern::{Point, PointPattern, Window};
use crate::stats::KVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
    pub n_classes: usize,
}

impl WindowSpec {
    pub fn window(&self) -> Result<Window> {
        Window::new(self.x0, self.y0, self.width, self.height)
    }

    pub fn read(r: impl Read) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn reader(r: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r)
}

fn check_header(actual: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if actual.len() < expected.len() || actual.iter().zip(expected).any(|(a, e)| a != *e) {
        return Err(Error::parse(
            Some(1),
            format!("expected header starting with '{}', got '{}'", expected.join(","), actual.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let line = rec.position().map(|p| p.line());
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::parse(line, format!("missing column '{name}'")))?;
    raw.parse()
        .map_err(|_| Error::parse(line, format!("bad value '{raw}' in column '{name}'")))
}

/// Raw `(points, labels)` from a `x,y,class` CSV.
pub fn read_points(r: impl Read) -> Result<(Vec<Point>, Vec<usize>)> {
    let mut rdr = reader(r);
    check_header(rdr.headers()?, &["x", "y", "class"])?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line());
        let (x, y): (f64, f64) = (field(&rec, 0, "x")?, field(&rec, 1, "y")?);
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::parse(line, "non-finite coordinate"));
        }
        points.push(Point::new(x, y));
        labels.push(field(&rec, 2, "class")?);
    }
    Ok((points, labels))
}

pub fn read_pattern(r: impl Read, spec: &WindowSpec) -> Result<PointPattern> {
    let (points, labels) = read_points(r)?;
    PointPattern::new(points, labels, spec.window()?, spec.n_classes)
}

pub fn load_pattern(path: impl AsRef<Path>, spec: &WindowSpec) -> Result<PointPattern> {
    read_pattern(BufReader::new(File::open(path)?), spec)
}

pub fn write_pattern(mut w: impl Write, pattern: &PointPattern) -> Result<()> {
    writeln!(w, "x,y,class")?;
    for (p, c) in pattern.points().iter().zip(pattern.labels()) {
        writeln!(w, "{},{},{}", p.x, p.y, c)?;
    }
    Ok(())
}

pub fn read_features(r: impl Read) -> Result<FeatureTable> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    check_header(&headers, &["cell_index", "class"])?;
    let dim = headers.len() - 2;
    let (mut cells, mut labels, mut rows) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        cells.push(field(&rec, 0, "cell_index")?);
        labels.push(field(&rec, 1, "class")?);
        let row = (0..dim)
            .map(|d| field::<f64>(&rec, d + 2, &headers[d + 2]))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    FeatureTable::new(cells, labels, rows)
}

pub fn write_features(mut w: impl Write, table: &FeatureTable) -> Result<()> {
    write!(w, "cell_index,class")?;
    for d in 0..table.dim() {
        write!(w, ",f{d}")?;
    }
    writeln!(w)?;
    for r in 0..table.len() {
        write!(w, "{},{}", table.cell_index(r), table.label(r))?;
        for v in table.row(r) {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_predictions(r: impl Read) -> Result<Vec<Prediction>> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    check_header(&headers, &["x", "y", "class"])?;
    let has_size = headers.get(3) == Some("size");
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(Prediction {
            x: field(&rec, 0, "x")?,
            y: field(&rec, 1, "y")?,
            class: field(&rec, 2, "class")?,
            size: if has_size { field(&rec, 3, "size")? } else { 0 },
        });
    }
    Ok(out)
}

pub fn write_predictions(mut w: impl Write, preds: &[Prediction]) -> Result<()> {
    writeln!(w, "x,y,class,size")?;
    for p in preds {
        writeln!(w, "{},{},{},{}", p.x, p.y, p.class, p.size)?;
    }
    Ok(())
}

pub fn write_kvectors(mut w: impl Write, pattern: &PointPattern, field: &[KVector]) -> Result<()> {
    write!(w, "cell_index,x,y,class")?;
    if let Some(first) = field.first() {
        for c in 0..first.n_classes {
            for r in first.radii.as_slice() {
                write!(w, ",k{c}_r{r}")?;
            }
        }
    }
    writeln!(w)?;
    for v in field {
        let p = pattern.point(v.cell_index);
        write!(w, "{},{},{},{}", v.cell_index, p.x, p.y, pattern.label(v.cell_index))?;
        for x in &v.values {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `(cell_index, values)` rows of a K-vector CSV.
pub fn read_kvectors(r: impl Read) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    check_header(&headers, &["cell_index", "x", "y", "class"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let values = (4..headers.len())
            .map(|i| field::<f64>(&rec, i, &headers[i]))
            .collect::<Result<Vec<_>>>()?;
        out.push((field(&rec, 0, "cell_index")?, values));
    }
    Ok(out)
}

pub fn write_assignments(mut w: impl Write, assignments: &[Assignment]) -> Result<()> {
    writeln!(w, "cell_index,class,subclass")?;
    for a in assignments {
        writeln!(w, "{},{},{}", a.cell_index, a.class, a.subclass)?;
    }
    Ok(())
}

/// Write through a buffered file.
pub fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: impl AsRef<Path>) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}
