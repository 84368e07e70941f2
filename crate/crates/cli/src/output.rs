//! Atomic output files.
//!
//! Each artifact is rendered to memory, written to a temporary file in the
//! destination directory and renamed into place, so readers never observe
//! a partial file.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

/// Where results go: a file, a directory of files, or stdout.
#[derive(Debug, Clone)]
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Self { out }
    }

    /// Writes the single output of a subcommand.
    pub fn emit(&self, bytes: &[u8]) -> Result<(), CliError> {
        match &self.out {
            Some(path) => write_atomic(path, bytes),
            None => std::io::stdout()
                .lock()
                .write_all(bytes)
                .map_err(|e| CliError::Io(format!("stdout: {e}"))),
        }
    }

    /// Directory for multi-file outputs; created when missing.
    pub fn directory(&self) -> Result<PathBuf, CliError> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&parent).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Renders a CSV writer into a byte buffer.
pub fn render<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(buf)
}

pub fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}
