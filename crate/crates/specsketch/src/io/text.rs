use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use specsketch_core::TimeSeriesSource;

use super::{io_err, source_err, write_atomic, IoError, Result};

/// Headerless comma-separated rows, streamed twice: a validating scan for
/// the shape, then the data pass.
#[derive(Debug)]
pub struct CsvSource {
    path: PathBuf,
    reader: csv::Reader<File>,
    record: csv::StringRecord,
    rows: usize,
    cols: usize,
    dt: f64,
    line: u64,
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(f))
}

fn csv_error(path: &Path, e: csv::Error) -> IoError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => IoError::Io {
            path: path.into(),
            source,
        },
        other => IoError::Parse {
            path: path.into(),
            line,
            reason: format!("{other:?}"),
        },
    }
}

fn parse_record(path: &Path, line: u64, rec: &csv::StringRecord, cols: usize, out: &mut [f64]) -> Result<()> {
    if rec.len() != cols {
        return Err(IoError::RaggedRow {
            path: path.into(),
            line,
            expected: cols,
            found: rec.len(),
        });
    }
    for (o, field) in out.iter_mut().zip(rec.iter()) {
        *o = field.parse().map_err(|_| IoError::NonNumeric {
            path: path.into(),
            line,
            field: field.into(),
        })?;
    }
    Ok(())
}

impl CsvSource {
    pub fn open(path: &Path, dt: f64) -> Result<Self> {
        let mut reader = csv_reader(path)?;
        let mut record = csv::StringRecord::new();
        let mut rows = 0usize;
        let mut cols = 0usize;
        let mut scratch = Vec::new();
        while reader.read_record(&mut record).map_err(|e| csv_error(path, e))? {
            let line = record.position().map_or(rows as u64 + 1, |p| p.line());
            if rows == 0 {
                cols = record.len();
                scratch.resize(cols, 0.0);
            }
            parse_record(path, line, &record, cols, &mut scratch)?;
            rows += 1;
        }
        if rows == 0 {
            return Err(IoError::Parse {
                path: path.into(),
                line: 0,
                reason: "empty CSV file".into(),
            });
        }
        Ok(Self {
            path: path.into(),
            reader: csv_reader(path)?,
            record,
            rows,
            cols,
            dt,
            line: 0,
        })
    }
}

impl TimeSeriesSource for CsvSource {
    fn n_cols(&self) -> usize {
        self.cols
    }
    fn n_rows(&self) -> usize {
        self.rows
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn next_row(&mut self, out: &mut [f64]) -> specsketch_core::Result<bool> {
        let more = self
            .reader
            .read_record(&mut self.record)
            .map_err(|e| source_err(csv_error(&self.path, e)))?;
        if !more {
            return Ok(false);
        }
        self.line += 1;
        parse_record(&self.path, self.line, &self.record, self.cols, out).map_err(source_err)?;
        Ok(true)
    }
    fn rewind(&mut self) -> specsketch_core::Result<()> {
        self.reader = csv_reader(&self.path).map_err(source_err)?;
        self.line = 0;
        Ok(())
    }
}

/// Two numeric columns (lag/value or frequency/value) plus `#` comments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub comments: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Values are written in shortest round-trip exponent form, so reading a
/// table back is bit-exact.
pub fn write_table(path: &Path, header: &[&str], x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(specsketch_core::Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        }
        .into());
    }
    write_atomic(path, |w| {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        for (a, b) in x.iter().zip(y) {
            writeln!(w, "{a:e} {b:e}")?;
        }
        Ok(())
    })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let f = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut t = Table::default();
    for (i, line) in f.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let lineno = i as u64 + 1;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        if let Some(c) = s.strip_prefix('#') {
            t.comments.push(c.trim().to_string());
            continue;
        }
        let fields: Vec<&str> = s.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(IoError::RaggedRow {
                path: path.into(),
                line: lineno,
                expected: 2,
                found: fields.len(),
            });
        }
        let num = |f: &str| {
            f.parse::<f64>().map_err(|_| IoError::NonNumeric {
                path: path.into(),
                line: lineno,
                field: f.into(),
            })
        };
        t.x.push(num(fields[0])?);
        t.y.push(num(fields[1])?);
    }
    Ok(t)
}

/// One sorted index per line.
pub fn write_index_set(path: &Path, indices: &[usize]) -> Result<()> {
    write_atomic(path, |w| {
        for i in indices {
            writeln!(w, "{i}")?;
        }
        Ok(())
    })
}

pub fn read_index_set(path: &Path) -> Result<Vec<usize>> {
    let f = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        out.push(s.parse().map_err(|_| IoError::NonNumeric {
            path: path.into(),
            line: i as u64 + 1,
            field: s.into(),
        })?);
    }
    Ok(out)
}

/// Block files relative to the manifest's directory, one per line.
pub fn write_manifest(path: &Path, entries: &[PathBuf]) -> Result<()> {
    write_atomic(path, |w| {
        for e in entries {
            writeln!(w, "{}", e.display())?;
        }
        Ok(())
    })
}

/// Resolved block paths listed by a manifest (`#` lines are comments).
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let f = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut out = Vec::new();
    for line in f.lines() {
        let line = line.map_err(io_err(path))?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        out.push(base.join(s));
    }
    Ok(out)
}
