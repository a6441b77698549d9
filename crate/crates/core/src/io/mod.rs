//! File formats: the binary matrix container, IDX image/label files and PGM directories.

mod idx;
mod matrix;
mod pgm;

use std::fs::File;
use std::path::Path;

pub use idx::{read_idx_images, read_idx_labels, write_idx_images, write_idx_labels};
pub use matrix::{decode_matrix, encode_matrix, read_matrix, read_matrix_raw, write_matrix};
pub use pgm::{read_pgm_dir, write_pgm};

use crate::error::{Error, Result};

/// Writes `path` through a temporary file in the same directory that is renamed into place
/// only after `fill` succeeds.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut File) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    fill(tmp.as_file_mut())?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Atomically writes a byte buffer.
pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    write_atomic(path, |f| f.write_all(bytes).map_err(|e| Error::io(path, e)))
}
