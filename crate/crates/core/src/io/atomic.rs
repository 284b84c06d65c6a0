use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use super::IoError;

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place. A failure leaves any previous file untouched.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| IoError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| IoError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

/// Writes several files. Every temporary is fully written before the first
/// rename, so a content error never leaves a partial set behind.
pub fn write_all_atomic(files: &[(PathBuf, Vec<u8>)]) -> Result<(), IoError> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| IoError::io(path, e))?;
        tmp.write_all(bytes).map_err(|e| IoError::io(path, e))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    }
    Ok(())
}
