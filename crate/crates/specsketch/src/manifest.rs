//! Per-run provenance record written next to every output.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::io::{write_atomic, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Full command line, enough to rerun.
    pub argv: Vec<String>,
    /// Every flag after defaults were applied.
    pub flags: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: Vec<String>) -> Self {
        let started = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or(Duration::ZERO);
        Self {
            subcommand: subcommand.into(),
            argv,
            flags: serde_json::Value::Null,
            seed: None,
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix_s: started.as_secs(),
            wall_clock_s: 0.0,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_flags<T: Serialize>(&mut self, args: &T) -> &mut Self {
        self.flags = serde_json::to_value(args).unwrap_or(serde_json::Value::Null);
        self
    }

    /// `<output>.run.json` for a file output, `<dir>/run.json` for a directory.
    pub fn path_for(output: &Path) -> PathBuf {
        if output.is_dir() {
            return output.join("run.json");
        }
        let mut name = output.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(".run.json");
        output.with_file_name(name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, self).map_err(std::io::Error::other)?;
            std::io::Write::write_all(w, b"\n")
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(crate::io::io_err(path))?;
        serde_json::from_str(&text).map_err(|e| crate::io::IoError::Parse {
            path: path.into(),
            line: e.line() as u64,
            reason: e.to_string(),
        })
    }
}
