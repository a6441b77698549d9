use std::path::Path;

use hound::{SampleFormat, WavSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample encoding of written files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WavFormat {
    #[default]
    Int16,
    Float32,
}

/// Reads a mono 16-bit integer or 32-bit float WAV into samples in [-1, 1] and its rate.
pub fn read_wav(path: &Path) -> Result<(Vec<f64>, u32)> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Format {
            format: "wav",
            reason: format!("{}: expected mono, found {} channels", path.display(), spec.channels),
        });
    }
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        (fmt, bits) => {
            return Err(Error::Format {
                format: "wav",
                reason: format!("{}: unsupported {bits}-bit {fmt:?} samples", path.display()),
            })
        }
    };
    Ok((samples, spec.sample_rate))
}

/// Writes mono samples; integer output is clipped to [-1, 1].
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32, format: WavFormat) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: match format {
            WavFormat::Int16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Int16 => SampleFormat::Int,
            WavFormat::Float32 => SampleFormat::Float,
        },
    };
    crate::io::write_atomic(path, |file| {
        let mut writer = hound::WavWriter::new(std::io::BufWriter::new(file), spec)?;
        for &s in samples {
            match format {
                WavFormat::Int16 => writer.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16)?,
                WavFormat::Float32 => writer.write_sample(s as f32)?,
            }
        }
        writer.finalize()?;
        Ok(())
    })
}
