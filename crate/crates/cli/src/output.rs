//! File output helpers.
//!
//! Results are computed fully in memory and written in one shot, so a
//! failing run never leaves a partial output file behind.

use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub struct OutputError {
    path: String,
    source: std::io::Error,
}

impl fmt::Display for OutputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "could not write {}: {}", self.path, self.source)
    }
}

pub fn write_text(path: &Path, content: &str) -> Result<(), OutputError> {
    std::fs::write(path, content).map_err(|source| OutputError {
        path: path.display().to_string(),
        source,
    })
}
