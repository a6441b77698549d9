use std::path::Path;

use image::GrayImage;
use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Reads every `.pgm` file of a directory (sorted by name) into columns scaled to [0, 1].
/// All images must share one size, which is returned alongside.
pub fn read_pgm_dir(dir: &Path) -> Result<(Array2<f64>, (usize, usize))> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Format { format: "pgm", reason: format!("no .pgm files in {}", dir.display()) });
    }
    let mut cols: Vec<Array1<f64>> = Vec::with_capacity(paths.len());
    let mut side = None;
    for p in &paths {
        let img = image::open(p)?.into_luma8();
        let dims = (img.height() as usize, img.width() as usize);
        if *side.get_or_insert(dims) != dims {
            return Err(Error::dim("pgm image size", format!("{:?}", side.unwrap()), format!("{dims:?} ({})", p.display())));
        }
        cols.push(img.pixels().map(|px| f64::from(px.0[0]) / 255.0).collect());
    }
    let side = side.expect("at least one image");
    let mut m = Array2::zeros((side.0 * side.1, cols.len()));
    for (mut dst, src) in m.columns_mut().into_iter().zip(&cols) {
        dst.assign(src);
    }
    Ok((m, side))
}

/// Writes one image column (values clipped to [0, 1]) as binary PGM.
pub fn write_pgm(path: &Path, pixels: ArrayView1<'_, f64>, side: (usize, usize)) -> Result<()> {
    if side.0 * side.1 != pixels.len() {
        return Err(Error::dim("pgm image size", side.0 * side.1, pixels.len()));
    }
    let raw: Vec<u8> = pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let img = GrayImage::from_raw(side.1 as u32, side.0 as u32, raw).expect("buffer matches size");
    let mut buf = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut buf), image::ImageFormat::Pnm)?;
    super::write_bytes_atomic(path, &buf)
}
