use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SnrMix<T> {
    pub mixture: Vec<T>,
    pub noise: Vec<T>,
    /// Factor applied to the noise.
    pub scale: T,
}

/// Adds `noise` scaled so that `10 log10(|speech|^2 / |scaled noise|^2) = snr_db`.
pub fn mix_at_snr<T: Scalar>(speech: &[T], noise: &[T], snr_db: f64) -> Result<SnrMix<T>> {
    if speech.len() != noise.len() {
        return Err(Error::dim("mix_at_snr lengths", speech.len(), noise.len()));
    }
    if !snr_db.is_finite() {
        return Err(Error::Config(format!("snr must be finite, got {snr_db}")));
    }
    let energy = |x: &[T]| x.iter().map(|v| v.as_f64().powi(2)).sum::<f64>();
    let (es, en) = (energy(speech), energy(noise));
    if en == 0.0 {
        return Err(Error::Validation("noise signal is all zero".into()));
    }
    let scale = T::of((es / en * 10f64.powf(-snr_db / 10.0)).sqrt());
    let noise: Vec<T> = noise.iter().map(|v| *v * scale).collect();
    let mixture = speech.iter().zip(&noise).map(|(s, n)| *s + *n).collect();
    Ok(SnrMix { mixture, noise, scale })
}
