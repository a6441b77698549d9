use std::path::Path;

use ndarray::{Array2, ShapeBuilder};

use crate::error::{Error, Result};
use crate::model::validate_nonnegative;

const MAGIC: &[u8; 4] = b"NMF1";

/// `NMF1`, u32 LE rows, u32 LE cols, then f64 LE values in column-major order.
pub fn encode_matrix(m: &Array2<f64>) -> Result<Vec<u8>> {
    let (r, c) = m.dim();
    let too_big = |n: usize| u32::try_from(n).map_err(|_| Error::Validation(format!("dimension {n} exceeds u32")));
    let mut out = Vec::with_capacity(12 + 8 * r * c);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&too_big(r)?.to_le_bytes());
    out.extend_from_slice(&too_big(c)?.to_le_bytes());
    for col in m.columns() {
        for v in col {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses a matrix container without checking the sign of the values.
pub fn decode_matrix(bytes: &[u8]) -> Result<Array2<f64>> {
    let bad = |reason: String| Error::Format { format: "matrix", reason };
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(bad("missing NMF1 header".into()));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().expect("4 bytes")) as usize;
    let (r, c) = (word(4), word(8));
    let expected = r
        .checked_mul(c)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(12))
        .ok_or_else(|| bad(format!("{r} x {c} overflows")))?;
    if bytes.len() != expected {
        return Err(bad(format!("{r} x {c} needs {expected} bytes, found {}", bytes.len())));
    }
    let values: Vec<f64> = bytes[12..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    Array2::from_shape_vec((r, c).f(), values).map_err(|e| bad(e.to_string()))
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    super::write_bytes_atomic(path, &encode_matrix(m)?)
}

pub fn read_matrix_raw(path: &Path) -> Result<Array2<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes)
}

/// Reads a data matrix, rejecting negative or non-finite entries.
pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let m = read_matrix_raw(path)?;
    validate_nonnegative(m.view(), &path.display().to_string())?;
    Ok(m)
}
