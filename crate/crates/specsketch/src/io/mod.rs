//! File formats.
//!
//! * `DMAT`: dense row-major matrix, 30-byte header then `f64` LE payload.
//! * `SKB1`: one sketched block, 56-byte header then `T × m` `f64` LE.
//! * headerless CSV, one timestep per line.
//! * LAMMPS text dumps (`atom` style).
//! * plain-text tables, index sets and block manifests.
//!
//! All multi-byte values are little-endian regardless of host. Every
//! writer goes through a temporary file that is renamed into place.

mod dmat;
mod lammps;
mod skb;
mod text;

pub use dmat::{read_dmat_header, write_dmat, DmatHeader, DmatSource, DmatWriter, DMAT_HEADER_BYTES};
pub use lammps::{parse_lammps_dump, FieldSpec, LammpsSource};
pub use skb::{read_sketched, write_sketched, SkbRead, SKB_HEADER_BYTES};
pub use text::{
    read_index_set, read_manifest, read_table, write_index_set, write_manifest, write_table, CsvSource, Table,
};

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use specsketch_core::TimeSeriesSource;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: bad magic: expected {expected:?}, found {found:?}")]
    BadMagic {
        path: PathBuf,
        expected: &'static str,
        found: [u8; 4],
    },

    #[error("{path}: unsupported format version {found} (expected {expected})")]
    VersionMismatch { path: PathBuf, expected: u16, found: u16 },

    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("{path}: truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { path: PathBuf, expected: u64, found: u64 },

    #[error("{path}: {found} bytes of trailing data after the payload")]
    TrailingData { path: PathBuf, found: u64 },

    #[error("{path}:{line}: expected {expected} fields, found {found}")]
    RaggedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: not a number: {field:?}")]
    NonNumeric { path: PathBuf, line: u64, field: String },

    #[error("{path}: field {field:?} not found; available columns: {}", available.join(", "))]
    MissingField {
        path: PathBuf,
        field: String,
        available: Vec<String>,
    },

    #[error("{path}: frame {frame} has {found} atoms, expected {expected}")]
    AtomCountChanged {
        path: PathBuf,
        frame: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: u64, reason: String },

    #[error(transparent)]
    Core(#[from] specsketch_core::Error),
}

impl IoError {
    /// Stable short code for each failure class.
    pub fn code(&self) -> &'static str {
        match self {
            IoError::Io { .. } => "io",
            IoError::BadMagic { .. } => "bad-magic",
            IoError::VersionMismatch { .. } => "version-mismatch",
            IoError::MalformedHeader { .. } => "malformed-header",
            IoError::TruncatedPayload { .. } => "truncated-payload",
            IoError::TrailingData { .. } => "trailing-data",
            IoError::RaggedRow { .. } => "ragged-row",
            IoError::NonNumeric { .. } => "non-numeric",
            IoError::MissingField { .. } => "missing-field",
            IoError::AtomCountChanged { .. } => "atom-count-changed",
            IoError::Parse { .. } => "parse",
            IoError::Core(_) => "core",
        }
    }
}

pub type Result<T> = std::result::Result<T, IoError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Converts an I/O failure inside a streaming source into the core error type.
pub(crate) fn source_err(e: IoError) -> specsketch_core::Error {
    match e {
        IoError::Core(c) => c,
        other => specsketch_core::Error::Source(other.to_string()),
    }
}

/// A temporary file in `path`'s directory, readable like a normal output
/// once renamed.
pub(crate) fn temp_beside(path: &Path) -> Result<tempfile::NamedTempFile> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(tmp.path(), fs::Permissions::from_mode(0o644)).map_err(io_err(path))?;
    }
    Ok(tmp)
}

/// Writes through a sibling temporary file that is renamed over `path`
/// only once `f` succeeds.
pub fn write_atomic<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut io::BufWriter<&mut fs::File>) -> io::Result<()>,
{
    let mut tmp = temp_beside(path)?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        f(&mut w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
    }
    tmp.persist(path).map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseFormat {
    Dmat,
    Csv,
}

impl DenseFormat {
    /// `.csv` (any case) is CSV; everything else is DMAT.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DenseFormat::Csv,
            _ => DenseFormat::Dmat,
        }
    }
}

/// A boxed streaming source over any supported dense input.
pub type BoxedSource = Box<dyn TimeSeriesSource + Send>;

/// Opens `path` as a streaming source. CSV files carry no time step, so
/// `dt` applies to them (DMAT stores its own).
pub fn read_dense(path: &Path, format: DenseFormat, dt: f64) -> Result<BoxedSource> {
    Ok(match format {
        DenseFormat::Dmat => Box::new(DmatSource::open(path)?),
        DenseFormat::Csv => Box::new(CsvSource::open(path, dt)?),
    })
}
