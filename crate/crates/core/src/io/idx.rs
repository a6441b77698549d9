use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

const IMAGES: u32 = 0x0000_0803;
const LABELS: u32 = 0x0000_0801;

fn header(bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>> {
    let bad = |reason: String| Error::Format { format: "idx", reason };
    if bytes.len() < 4 + 4 * dims {
        return Err(bad("truncated header".into()));
    }
    let word = |k: usize| u32::from_be_bytes(bytes[k..k + 4].try_into().expect("4 bytes"));
    if word(0) != magic {
        return Err(bad(format!("magic {:#010x}, expected {magic:#010x}", word(0))));
    }
    let shape: Vec<usize> = (0..dims).map(|d| word(4 + 4 * d) as usize).collect();
    let payload: usize = shape.iter().product();
    if bytes.len() != 4 + 4 * dims + payload {
        return Err(bad(format!("shape {shape:?} does not match {} payload bytes", bytes.len() - 4 - 4 * dims)));
    }
    Ok(shape)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads an IDX image file into a `(rows*cols) x count` matrix with pixels scaled to [0, 1]
/// (row-major pixel order within each column). Returns the matrix and the image side lengths.
pub fn read_idx_images(path: &Path) -> Result<(Array2<f64>, (usize, usize))> {
    let bytes = read(path)?;
    let shape = header(&bytes, IMAGES, 3)?;
    let (n, r, c) = (shape[0], shape[1], shape[2]);
    let px = r * c;
    let data = &bytes[16..];
    let m = Array2::from_shape_fn((px, n), |(p, k)| f64::from(data[k * px + p]) / 255.0);
    Ok((m, (r, c)))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read(path)?;
    header(&bytes, LABELS, 1)?;
    Ok(bytes[8..].to_vec())
}

/// Writes columns of `images` (values in [0, 1], rounded to bytes) as an IDX image file.
pub fn write_idx_images(path: &Path, images: &Array2<f64>, side: (usize, usize)) -> Result<()> {
    if side.0 * side.1 != images.nrows() {
        return Err(Error::dim("idx image size", side.0 * side.1, images.nrows()));
    }
    let mut out = Vec::with_capacity(16 + images.len());
    out.extend_from_slice(&IMAGES.to_be_bytes());
    for d in [images.ncols(), side.0, side.1] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    for col in images.columns() {
        out.extend(col.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    super::write_bytes_atomic(path, &out)
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    super::write_bytes_atomic(path, &out)
}
