//! On-disk formats: KITTI pose files, match CSVs, binary PGM label masks,
//! flat `key = value` configuration, and atomic file writes.

mod atomic;
pub mod config;
pub mod dataset;
mod matches;
mod pgm;
mod poses;

pub use atomic::{write_atomic, write_all_atomic};
pub use config::{Config, ConfigError, MotionSource};
pub use dataset::{read_sequence, write_synthetic_sequence, PairInput, SequenceInput};
pub use matches::{format_matches, matches_file_name, parse_matches, read_matches, write_matches};
pub use pgm::{decode_pgm, encode_pgm, mask_file_name, read_mask, write_mask};
pub use poses::{format_poses_kitti, parse_poses_kitti, read_poses_kitti, write_poses_kitti};

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Error, Debug)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: rotation is not orthonormal")]
    InvalidRotation { path: PathBuf, line: usize },
    #[error("{path}: unsupported format: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },
    #[error("{path}: mask is {got_width}x{got_height}, expected {width}x{height}")]
    DimensionMismatch { path: PathBuf, width: usize, height: usize, got_width: usize, got_height: usize },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }

    /// True for malformed content, as opposed to filesystem failures.
    pub fn is_format_error(&self) -> bool {
        !matches!(self, IoError::Io { .. })
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}
