use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use specsketch_core::sketch::{SketchKind, SketchSpec, Transform};
use specsketch_core::{Matrix, SketchedBlock};

use super::{io_err, write_atomic, IoError, Result};

pub const SKB_MAGIC: &[u8; 4] = b"SKB1";
pub const SKB_VERSION: u16 = 1;
pub const SKB_HEADER_BYTES: usize = 56;

fn header_bytes(block: &SketchedBlock) -> [u8; SKB_HEADER_BYTES] {
    let s = &block.spec;
    let mut b = [0u8; SKB_HEADER_BYTES];
    b[0..4].copy_from_slice(SKB_MAGIC);
    b[4..6].copy_from_slice(&SKB_VERSION.to_le_bytes());
    b[6..14].copy_from_slice(&block.block_index.to_le_bytes());
    b[14..22].copy_from_slice(&(block.t() as u64).to_le_bytes());
    b[22..30].copy_from_slice(&(s.m as u64).to_le_bytes());
    b[30..38].copy_from_slice(&(s.n as u64).to_le_bytes());
    b[38] = s.kind.code();
    b[39] = s.transform.code();
    b[40..48].copy_from_slice(&s.seed.to_le_bytes());
    b[48..56].copy_from_slice(&block.dt.to_le_bytes());
    b
}

pub fn write_sketched(path: &Path, block: &SketchedBlock) -> Result<()> {
    if block.data.cols() != block.spec.m {
        return Err(specsketch_core::Error::DimensionMismatch {
            expected: block.spec.m,
            found: block.data.cols(),
        }
        .into());
    }
    write_atomic(path, |w| {
        w.write_all(&header_bytes(block))?;
        for v in block.data.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    })
}

/// A block read back from disk plus any non-fatal observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SkbRead {
    pub block: SketchedBlock,
    pub warnings: Vec<String>,
}

pub fn read_sketched(path: &Path) -> Result<SkbRead> {
    let file = File::open(path).map_err(io_err(path))?;
    let len = file.metadata().map_err(io_err(path))?.len();
    let mut r = BufReader::new(file);
    let mut b = [0u8; SKB_HEADER_BYTES];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => IoError::MalformedHeader {
            path: path.into(),
            reason: "file shorter than the 56-byte header".into(),
        },
        _ => io_err(path)(e),
    })?;
    if &b[0..4] != SKB_MAGIC {
        return Err(IoError::BadMagic {
            path: path.into(),
            expected: "SKB1",
            found: b[0..4].try_into().unwrap(),
        });
    }
    let version = u16::from_le_bytes([b[4], b[5]]);
    if version != SKB_VERSION {
        return Err(IoError::VersionMismatch {
            path: path.into(),
            expected: SKB_VERSION,
            found: version,
        });
    }
    let word = |r: std::ops::Range<usize>| u64::from_le_bytes(b[r].try_into().unwrap());
    let malformed = |reason: String| IoError::MalformedHeader {
        path: path.into(),
        reason,
    };
    let block_index = word(6..14);
    let t = word(14..22);
    let m = word(22..30);
    let n = word(30..38);
    let kind = SketchKind::from_code(b[38]).ok_or_else(|| malformed(format!("unknown sketch kind {}", b[38])))?;
    let transform =
        Transform::from_code(b[39]).ok_or_else(|| malformed(format!("unknown transform tag {}", b[39])))?;
    let seed = word(40..48);
    let dt = f64::from_le_bytes(b[48..56].try_into().unwrap());
    if t == 0 || m == 0 || n == 0 {
        return Err(malformed(format!("zero dimension (T={t}, m={m}, N={n})")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(malformed(format!("time step {dt} is not positive")));
    }
    let payload = t
        .checked_mul(m)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| malformed("dimensions overflow".into()))?;
    let found = len - SKB_HEADER_BYTES as u64;
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
    let mut warnings = Vec::new();
    if m > n {
        warnings.push(format!("{}: m = {m} exceeds N = {n}", path.display()));
    }
    let mut data = Matrix::zeros(t as usize, m as usize);
    let mut cell = [0u8; 8];
    for v in data.as_mut_slice() {
        r.read_exact(&mut cell).map_err(io_err(path))?;
        *v = f64::from_le_bytes(cell);
    }
    let spec = SketchSpec::new(kind, m as usize, n as usize, seed).with_transform(transform);
    Ok(SkbRead {
        block: SketchedBlock {
            block_index,
            spec,
            dt,
            data,
        },
        warnings,
    })
}
