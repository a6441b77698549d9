//! Loading matrices from the supported file formats.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use mdnmf::audio::{read_wav, stft, StftConfig};
use mdnmf::io::{read_idx_images, read_matrix, read_pgm_dir};
use ndarray::{concatenate, Array2, Axis};

use crate::config::Dataset;
use crate::error::{config_err, CliResult};

pub fn is_wav(path: &Path) -> bool {
    path.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav"))
}

fn magic(path: &Path) -> CliResult<[u8; 4]> {
    let mut buf = [0u8; 4];
    File::open(path)
        .and_then(|mut f| f.read_exact(&mut buf))
        .map_err(|e| mdnmf::Error::Io { path: path.to_path_buf(), source: e })?;
    Ok(buf)
}

/// Reads one file as a non-negative matrix with one item per column: a PGM directory, an IDX
/// image file, a WAV file (STFT magnitudes) or a matrix container.
pub fn load_matrix(path: &Path, stft_cfg: &StftConfig) -> CliResult<Array2<f64>> {
    if path.is_dir() {
        return Ok(read_pgm_dir(path)?.0);
    }
    if is_wav(path) {
        let (samples, rate) = read_wav(path)?;
        if rate != stft_cfg.sample_rate {
            return Err(config_err(format!(
                "{} has sample rate {rate}, the STFT expects {}",
                path.display(),
                stft_cfg.sample_rate
            )));
        }
        return Ok(stft(&samples, stft_cfg)?.magnitudes);
    }
    match magic(path)? {
        [0, 0, 8, 3] => Ok(read_idx_images(path)?.0),
        _ => Ok(read_matrix(path)?),
    }
}

/// Loads every file of `ds` and concatenates the columns.
pub fn load_dataset(ds: &Dataset, stft_cfg: &StftConfig) -> CliResult<Array2<f64>> {
    let parts = ds
        .paths()
        .iter()
        .map(|p| load_matrix(p, stft_cfg))
        .collect::<CliResult<Vec<_>>>()?;
    if parts.len() == 1 {
        return Ok(parts.into_iter().next().expect("one part"));
    }
    let rows = parts[0].nrows();
    if let Some(bad) = parts.iter().position(|p| p.nrows() != rows) {
        return Err(config_err(format!(
            "{} has {} features, expected {rows}",
            ds.paths()[bad].display(),
            parts[bad].nrows()
        )));
    }
    let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
    Ok(concatenate(Axis(1), &views).expect("row counts checked"))
}

pub fn load_all(list: &[Dataset], stft_cfg: &StftConfig) -> CliResult<Vec<Array2<f64>>> {
    list.iter().map(|d| load_dataset(d, stft_cfg)).collect()
}

/// Selects columns by index.
pub fn columns(m: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    m.select(Axis(1), idx)
}
