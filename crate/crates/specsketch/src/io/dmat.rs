use std::fs::File;
use std::io::{self, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use specsketch_core::{Matrix, TimeSeriesSource};

use super::{io_err, source_err, write_atomic, IoError, Result};

pub const DMAT_MAGIC: &[u8; 4] = b"DMAT";
pub const DMAT_VERSION: u16 = 1;
pub const DMAT_HEADER_BYTES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmatHeader {
    pub rows: u64,
    pub cols: u64,
    pub dt: f64,
}

impl DmatHeader {
    pub fn to_bytes(&self) -> [u8; DMAT_HEADER_BYTES] {
        let mut b = [0u8; DMAT_HEADER_BYTES];
        b[0..4].copy_from_slice(DMAT_MAGIC);
        b[4..6].copy_from_slice(&DMAT_VERSION.to_le_bytes());
        b[6..14].copy_from_slice(&self.rows.to_le_bytes());
        b[14..22].copy_from_slice(&self.cols.to_le_bytes());
        b[22..30].copy_from_slice(&self.dt.to_le_bytes());
        b
    }

    fn parse(path: &Path, b: &[u8; DMAT_HEADER_BYTES]) -> Result<Self> {
        if &b[0..4] != DMAT_MAGIC {
            return Err(IoError::BadMagic {
                path: path.into(),
                expected: "DMAT",
                found: b[0..4].try_into().unwrap(),
            });
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != DMAT_VERSION {
            return Err(IoError::VersionMismatch {
                path: path.into(),
                expected: DMAT_VERSION,
                found: version,
            });
        }
        let word = |r: std::ops::Range<usize>| u64::from_le_bytes(b[r].try_into().unwrap());
        let h = DmatHeader {
            rows: word(6..14),
            cols: word(14..22),
            dt: f64::from_le_bytes(b[22..30].try_into().unwrap()),
        };
        if h.cols == 0 {
            return Err(IoError::MalformedHeader {
                path: path.into(),
                reason: "zero columns".into(),
            });
        }
        if !(h.dt > 0.0 && h.dt.is_finite()) {
            return Err(IoError::MalformedHeader {
                path: path.into(),
                reason: format!("time step {} is not positive", h.dt),
            });
        }
        Ok(h)
    }

    pub fn payload_bytes(&self) -> Option<u64> {
        self.rows.checked_mul(self.cols)?.checked_mul(8)
    }
}

fn read_header(path: &Path, file: &mut File) -> Result<DmatHeader> {
    let mut b = [0u8; DMAT_HEADER_BYTES];
    file.read_exact(&mut b).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => IoError::MalformedHeader {
            path: path.into(),
            reason: "file shorter than the 30-byte header".into(),
        },
        _ => io_err(path)(e),
    })?;
    let h = DmatHeader::parse(path, &b)?;
    let len = file.metadata().map_err(io_err(path))?.len();
    let payload = h.payload_bytes().ok_or_else(|| IoError::MalformedHeader {
        path: path.into(),
        reason: "dimensions overflow".into(),
    })?;
    let found = len - DMAT_HEADER_BYTES as u64;
    if found < payload {
        return Err(IoError::TruncatedPayload {
            path: path.into(),
            expected: payload,
            found,
        });
    }
    if found > payload {
        return Err(IoError::TrailingData {
            path: path.into(),
            found: found - payload,
        });
    }
    Ok(h)
}

pub fn read_dmat_header(path: &Path) -> Result<DmatHeader> {
    let mut f = File::open(path).map_err(io_err(path))?;
    read_header(path, &mut f)
}

/// Streams rows of a DMAT file with a fixed two-row resident budget: one
/// row-sized read buffer and one row of decoded bytes.
#[derive(Debug)]
pub struct DmatSource {
    path: PathBuf,
    header: DmatHeader,
    reader: BufReader<File>,
    bytes: Vec<u8>,
    pos: u64,
}

impl DmatSource {
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = File::open(path).map_err(io_err(path))?;
        let header = read_header(path, &mut file)?;
        let row_bytes = 8 * header.cols as usize;
        Ok(Self {
            path: path.into(),
            header,
            reader: BufReader::with_capacity(row_bytes, file),
            bytes: vec![0u8; row_bytes],
            pos: 0,
        })
    }

    pub fn header(&self) -> &DmatHeader {
        &self.header
    }

    /// Bytes held by the reader's buffers.
    pub fn resident_buffer_bytes(&self) -> usize {
        self.reader.capacity() + self.bytes.capacity()
    }

    fn read_row(&mut self, out: &mut [f64]) -> Result<bool> {
        if self.pos == self.header.rows {
            return Ok(false);
        }
        if out.len() != self.header.cols as usize {
            return Err(specsketch_core::Error::DimensionMismatch {
                expected: self.header.cols as usize,
                found: out.len(),
            }
            .into());
        }
        self.reader.read_exact(&mut self.bytes).map_err(io_err(&self.path))?;
        for (o, c) in out.iter_mut().zip(self.bytes.chunks_exact(8)) {
            *o = f64::from_le_bytes(c.try_into().unwrap());
        }
        self.pos += 1;
        Ok(true)
    }
}

impl TimeSeriesSource for DmatSource {
    fn n_cols(&self) -> usize {
        self.header.cols as usize
    }
    fn n_rows(&self) -> usize {
        self.header.rows as usize
    }
    fn dt(&self) -> f64 {
        self.header.dt
    }
    fn next_row(&mut self, out: &mut [f64]) -> specsketch_core::Result<bool> {
        self.read_row(out).map_err(source_err)
    }
    fn rewind(&mut self) -> specsketch_core::Result<()> {
        self.reader
            .seek(SeekFrom::Start(DMAT_HEADER_BYTES as u64))
            .map_err(|e| source_err(io_err(&self.path)(e)))?;
        self.pos = 0;
        Ok(())
    }
}

/// Streaming DMAT writer; the file appears at `path` only after `finish`.
pub struct DmatWriter {
    path: PathBuf,
    header: DmatHeader,
    tmp: tempfile::NamedTempFile,
    buf: Vec<u8>,
    written: u64,
}

impl DmatWriter {
    pub fn create(path: &Path, rows: u64, cols: u64, dt: f64) -> Result<Self> {
        let header = DmatHeader { rows, cols, dt };
        let mut tmp = super::temp_beside(path)?;
        tmp.write_all(&header.to_bytes()).map_err(io_err(path))?;
        Ok(Self {
            path: path.into(),
            header,
            tmp,
            buf: Vec::with_capacity(8 * cols as usize),
            written: 0,
        })
    }

    pub fn write_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() as u64 != self.header.cols {
            return Err(specsketch_core::Error::DimensionMismatch {
                expected: self.header.cols as usize,
                found: row.len(),
            }
            .into());
        }
        self.buf.clear();
        for v in row {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        self.tmp.write_all(&self.buf).map_err(io_err(&self.path))?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.header.rows {
            return Err(IoError::MalformedHeader {
                path: self.path.clone(),
                reason: format!("wrote {} rows, header declares {}", self.written, self.header.rows),
            });
        }
        self.tmp.flush().map_err(io_err(&self.path))?;
        let path = self.path.clone();
        self.tmp.persist(&path).map_err(|e| io_err(&path)(e.error))?;
        Ok(())
    }
}

/// Writes an in-memory matrix.
pub fn write_dmat(path: &Path, data: &Matrix, dt: f64) -> Result<()> {
    write_atomic(path, |w| {
        let h = DmatHeader {
            rows: data.rows() as u64,
            cols: data.cols() as u64,
            dt,
        };
        w.write_all(&h.to_bytes())?;
        for v in data.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    })
}
