//! Plain-text LAMMPS `atom`-style dumps:
//!
//! ```text
//! ITEM: TIMESTEP
//! 0
//! ITEM: NUMBER OF ATOMS
//! 3
//! ITEM: BOX BOUNDS pp pp pp
//! ...three lines...
//! ITEM: ATOMS id type vx vy vz
//! 1 1 0.5 0.1 -0.2
//! ```
//!
//! One row per frame, atoms ordered by ascending id.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use specsketch_core::TimeSeriesSource;

use super::{io_err, source_err, IoError, Result};

/// Which per-atom quantity becomes the matrix entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldSpec {
    Column(String),
    /// Euclidean norm of several columns, e.g. `norm(vx,vy,vz)`.
    Norm(Vec<String>),
}

impl FromStr for FieldSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("norm(").and_then(|r| r.strip_suffix(')')) {
            let cols: Vec<String> = inner.split(',').map(|c| c.trim().to_string()).collect();
            if cols.iter().any(String::is_empty) {
                return Err(format!("empty column name in {s:?}"));
            }
            return Ok(FieldSpec::Norm(cols));
        }
        if s.is_empty() || s.contains(|c: char| c.is_whitespace() || c == '(' || c == ')') {
            return Err(format!("not a column name or reducer: {s:?}"));
        }
        Ok(FieldSpec::Column(s.to_string()))
    }
}

impl FieldSpec {
    fn columns(&self) -> Vec<&str> {
        match self {
            FieldSpec::Column(c) => vec![c.as_str()],
            FieldSpec::Norm(cs) => cs.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug)]
struct Lines {
    path: PathBuf,
    inner: std::io::Lines<BufReader<File>>,
    line: u64,
}

impl Lines {
    fn open(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(io_err(path))?;
        Ok(Self {
            path: path.into(),
            inner: BufReader::new(f).lines(),
            line: 0,
        })
    }

    fn next(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            None => Ok(None),
            Some(l) => {
                self.line += 1;
                l.map(Some).map_err(io_err(&self.path))
            }
        }
    }

    fn next_nonempty(&mut self) -> Result<Option<String>> {
        while let Some(l) = self.next()? {
            if !l.trim().is_empty() {
                return Ok(Some(l));
            }
        }
        Ok(None)
    }

    fn require(&mut self, what: &str) -> Result<String> {
        self.next()?.ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, reason: String) -> IoError {
        IoError::Parse {
            path: self.path.clone(),
            line: self.line,
            reason,
        }
    }
}

struct Frame {
    columns: Vec<String>,
    atoms: usize,
}

/// Reads frame headers up to and including the `ITEM: ATOMS` line.
fn read_frame_header(lines: &mut Lines) -> Result<Option<Frame>> {
    let mut atoms = None;
    let first = match lines.next_nonempty()? {
        Some(l) => l,
        None => return Ok(None),
    };
    let mut item = first;
    loop {
        let tag = item
            .trim()
            .strip_prefix("ITEM:")
            .ok_or_else(|| lines.err(format!("expected an ITEM line, found {:?}", item.trim())))?
            .trim()
            .to_string();
        if tag == "TIMESTEP" {
            let v = lines.require("a timestep")?;
            v.trim().parse::<u64>().map_err(|_| lines.err(format!("bad timestep {:?}", v.trim())))?;
        } else if tag == "NUMBER OF ATOMS" {
            let v = lines.require("an atom count")?;
            atoms = Some(v.trim().parse::<usize>().map_err(|_| lines.err(format!("bad atom count {:?}", v.trim())))?);
        } else if tag.starts_with("BOX BOUNDS") {
            for _ in 0..3 {
                lines.require("box bounds")?;
            }
        } else if let Some(cols) = tag.strip_prefix("ATOMS") {
            let atoms = atoms.ok_or_else(|| lines.err("ATOMS section before NUMBER OF ATOMS".into()))?;
            return Ok(Some(Frame {
                columns: cols.split_whitespace().map(String::from).collect(),
                atoms,
            }));
        } else {
            return Err(lines.err(format!("unsupported section ITEM: {tag}")));
        }
        item = lines.require("ITEM: ATOMS")?;
    }
}

/// Column positions of `id` and the requested fields in one frame.
fn locate(path: &Path, frame: &Frame, field: &FieldSpec) -> Result<(usize, Vec<usize>)> {
    let find = |name: &str| {
        frame.columns.iter().position(|c| c == name).ok_or_else(|| IoError::MissingField {
            path: path.into(),
            field: name.into(),
            available: frame.columns.clone(),
        })
    };
    let id = find("id")?;
    let cols = field.columns().into_iter().map(find).collect::<Result<Vec<_>>>()?;
    Ok((id, cols))
}

/// Streams one row per frame; a first pass checks every frame and counts them.
#[derive(Debug)]
pub struct LammpsSource {
    path: PathBuf,
    field: FieldSpec,
    lines: Lines,
    atoms: usize,
    frames: usize,
    frame: usize,
    dt: f64,
    scratch: Vec<(u64, f64)>,
    row: Vec<f64>,
}

pub fn parse_lammps_dump(path: &Path, field: &FieldSpec, dt: f64) -> Result<LammpsSource> {
    LammpsSource::open(path, field.clone(), dt)
}

impl LammpsSource {
    pub fn open(path: &Path, field: FieldSpec, dt: f64) -> Result<Self> {
        let mut src = Self {
            path: path.into(),
            field,
            lines: Lines::open(path)?,
            atoms: 0,
            frames: 0,
            frame: 0,
            dt,
            scratch: Vec::new(),
            row: Vec::new(),
        };
        let mut row = Vec::new();
        while src.read_frame(&mut row)? {}
        if src.frames == 0 {
            return Err(IoError::Parse {
                path: path.into(),
                line: 0,
                reason: "no frames in dump".into(),
            });
        }
        src.lines = Lines::open(path)?;
        src.frame = 0;
        Ok(src)
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    /// Reads the next frame into `row` (resized to the atom count).
    fn read_frame(&mut self, row: &mut Vec<f64>) -> Result<bool> {
        let frame = match read_frame_header(&mut self.lines)? {
            Some(f) => f,
            None => return Ok(false),
        };
        if self.frame == 0 && self.frames == 0 {
            self.atoms = frame.atoms;
        } else if frame.atoms != self.atoms {
            return Err(IoError::AtomCountChanged {
                path: self.path.clone(),
                frame: self.frame,
                expected: self.atoms,
                found: frame.atoms,
            });
        }
        let (id_col, cols) = locate(&self.path, &frame, &self.field)?;
        self.scratch.clear();
        for _ in 0..frame.atoms {
            let line = self.lines.require("an atom line")?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != frame.columns.len() {
                return Err(IoError::RaggedRow {
                    path: self.path.clone(),
                    line: self.lines.line,
                    expected: frame.columns.len(),
                    found: fields.len(),
                });
            }
            let num = |k: usize| {
                fields[k].parse::<f64>().map_err(|_| IoError::NonNumeric {
                    path: self.path.clone(),
                    line: self.lines.line,
                    field: fields[k].into(),
                })
            };
            let id = fields[id_col].parse::<u64>().map_err(|_| IoError::NonNumeric {
                path: self.path.clone(),
                line: self.lines.line,
                field: fields[id_col].into(),
            })?;
            let value = match &self.field {
                FieldSpec::Column(_) => num(cols[0])?,
                FieldSpec::Norm(_) => {
                    let mut s = 0.0;
                    for &c in &cols {
                        let v = num(c)?;
                        s += v * v;
                    }
                    s.sqrt()
                }
            };
            self.scratch.push((id, value));
        }
        self.scratch.sort_by_key(|&(id, _)| id);
        if self.scratch.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(self.lines.err("duplicate atom id in frame".into()));
        }
        row.clear();
        row.extend(self.scratch.iter().map(|&(_, v)| v));
        self.frame += 1;
        if self.frame > self.frames {
            self.frames = self.frame;
        }
        Ok(true)
    }
}

impl TimeSeriesSource for LammpsSource {
    fn n_cols(&self) -> usize {
        self.atoms
    }
    fn n_rows(&self) -> usize {
        self.frames
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn next_row(&mut self, out: &mut [f64]) -> specsketch_core::Result<bool> {
        if self.frame == self.frames {
            return Ok(false);
        }
        let mut row = std::mem::take(&mut self.row);
        let more = self.read_frame(&mut row).map_err(source_err);
        self.row = row;
        let more = more?;
        if more {
            let row = &self.row;
            if out.len() != row.len() {
                return Err(specsketch_core::Error::DimensionMismatch {
                    expected: row.len(),
                    found: out.len(),
                });
            }
            out.copy_from_slice(row);
        }
        Ok(more)
    }
    fn rewind(&mut self) -> specsketch_core::Result<()> {
        self.lines = Lines::open(&self.path).map_err(source_err)?;
        self.frame = 0;
        Ok(())
    }
}
