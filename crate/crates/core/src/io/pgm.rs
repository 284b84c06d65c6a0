//! Binary PGM (P5, maxval 255) label masks.

use std::collections::BTreeSet;
use std::path::Path;

use super::{write_atomic, IoError};
use crate::road::LabelMask;

pub fn mask_file_name(frame: usize) -> String {
    format!("{frame:06}.pgm")
}

pub fn encode_pgm(mask: &LabelMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend_from_slice(mask.labels());
    out
}

/// Reads the next whitespace-delimited header token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

/// Decodes a P5 image into raw dimensions and pixel bytes.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>), IoError> {
    let unsupported = |reason: &str| IoError::UnsupportedFormat { path: path.to_path_buf(), reason: reason.to_string() };
    let mut pos = 0;
    if next_token(bytes, &mut pos) != Some(b"P5".as_slice()) {
        return Err(unsupported("not a binary PGM (P5)"));
    }
    let mut num = |what: &str| -> Result<usize, IoError> {
        next_token(bytes, &mut pos)
            .and_then(|t| std::str::from_utf8(t).ok())
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| unsupported(&format!("missing or invalid {what}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 255 {
        return Err(unsupported("maxval must be 255"));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(unsupported("truncated header"));
    }
    pos += 1;
    let n = width.checked_mul(height).ok_or_else(|| unsupported("image too large"))?;
    let raster = &bytes[pos..];
    if raster.len() < n {
        return Err(unsupported("truncated pixel data"));
    }
    if raster.len() > n {
        return Err(unsupported("trailing bytes after pixel data"));
    }
    Ok((width, height, raster.to_vec()))
}

/// Reads a label mask and checks its size against the expected image size.
pub fn read_mask(
    path: &Path,
    expected: (usize, usize),
    road_label: u8,
    dynamic_labels: &BTreeSet<u8>,
) -> Result<LabelMask, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    let (width, height, labels) = decode_pgm(&bytes, path)?;
    if (width, height) != expected {
        return Err(IoError::DimensionMismatch {
            path: path.to_path_buf(),
            width: expected.0,
            height: expected.1,
            got_width: width,
            got_height: height,
        });
    }
    Ok(LabelMask::new(width, height, labels, road_label, dynamic_labels.clone()).expect("size checked by decoder"))
}

pub fn write_mask(mask: &LabelMask, path: &Path) -> Result<(), IoError> {
    write_atomic(path, &encode_pgm(mask))
}
