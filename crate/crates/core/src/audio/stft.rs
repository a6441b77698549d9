use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Zip};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Frame layout of the transform. The window is a periodic Hann window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StftConfig {
    pub window_len: usize,
    pub fft_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Default for StftConfig {
    /// 512-sample frames with 50% overlap at 16 kHz (32 ms).
    fn default() -> Self {
        StftConfig { window_len: 512, fft_size: 512, hop: 256, sample_rate: 16_000 }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 || !self.window_len.is_multiple_of(2) {
            return Err(Error::Config(format!("window length must be even and >= 2, got {}", self.window_len)));
        }
        if self.hop != self.window_len / 2 {
            return Err(Error::Config(format!(
                "hop must be half the window length ({}), got {}",
                self.window_len / 2,
                self.hop
            )));
        }
        if self.fft_size < self.window_len {
            return Err(Error::Config(format!(
                "fft size {} is shorter than the window ({})",
                self.fft_size, self.window_len
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    fn pad(&self) -> usize {
        self.window_len / 2
    }

    /// Number of frames covering a signal of `len` samples after boundary padding.
    pub fn frames(&self, len: usize) -> usize {
        let padded = len + 2 * self.pad();
        1 + (padded.saturating_sub(self.window_len)).div_ceil(self.hop)
    }
}

/// Magnitudes and phases (radians), one column per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    pub magnitudes: Array2<T>,
    pub phases: Array2<T>,
    pub config: StftConfig,
    /// Length of the analysed signal, used to trim the reconstruction.
    pub signal_len: usize,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn to_complex(&self) -> Array2<Complex<T>> {
        let mut out = Array2::from_elem(self.magnitudes.dim(), Complex::new(T::zero(), T::zero()));
        Zip::from(&mut out)
            .and(&self.magnitudes)
            .and(&self.phases)
            .for_each(|o, &m, &p| *o = Complex::from_polar(m, p));
        out
    }

    pub fn from_complex(values: ArrayView2<'_, Complex<T>>, config: StftConfig, signal_len: usize) -> Self {
        Spectrogram {
            magnitudes: values.mapv(|c| c.norm()),
            phases: values.mapv(|c| c.arg()),
            config,
            signal_len,
        }
    }

    fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let shape = (self.config.bins(), self.config.frames(self.signal_len));
        if self.magnitudes.dim() != shape {
            return Err(Error::dim(
                "spectrogram shape",
                format!("{shape:?}"),
                format!("{:?}", self.magnitudes.dim()),
            ));
        }
        if self.phases.dim() != shape {
            return Err(Error::dim("phase shape", format!("{shape:?}"), format!("{:?}", self.phases.dim())));
        }
        Ok(())
    }
}

pub fn hann_periodic<T: Scalar>(len: usize) -> Vec<T> {
    (0..len)
        .map(|n| T::of(0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos()))
        .collect()
}

fn plan<T: Scalar>(size: usize, inverse: bool) -> Arc<dyn Fft<T>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(size)
    } else {
        planner.plan_fft_forward(size)
    }
}

/// Reflect-pads by half a window on both sides, then zero-pads the end to whole frames.
fn pad_signal<T: Scalar>(signal: &[T], cfg: &StftConfig) -> Vec<T> {
    let p = cfg.pad();
    let n = signal.len();
    let frames = cfg.frames(n);
    let total = cfg.window_len + (frames - 1) * cfg.hop;
    let mut out = Vec::with_capacity(total);
    out.extend((1..=p).rev().map(|k| signal[k]));
    out.extend_from_slice(signal);
    out.extend((0..p).map(|k| signal[n - 2 - k]));
    out.resize(total, T::zero());
    out
}

/// Short-time Fourier transform of a real signal.
pub fn stft<T: Scalar>(signal: &[T], cfg: &StftConfig) -> Result<Spectrogram<T>> {
    cfg.validate()?;
    if signal.len() < cfg.window_len {
        return Err(Error::Validation(format!(
            "signal of {} samples is shorter than one window ({})",
            signal.len(),
            cfg.window_len
        )));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("signal contains non-finite samples".into()));
    }
    let padded = pad_signal(signal, cfg);
    let window = hann_periodic::<T>(cfg.window_len);
    let frames = cfg.frames(signal.len());
    let fft = plan::<T>(cfg.fft_size, false);
    let zero = Complex::new(T::zero(), T::zero());
    let mut buf = vec![zero; cfg.fft_size];
    let mut values = Array2::from_elem((cfg.bins(), frames), zero);
    for f in 0..frames {
        let start = f * cfg.hop;
        buf.iter_mut().for_each(|b| *b = zero);
        for (k, (b, w)) in buf.iter_mut().zip(&window).enumerate() {
            *b = Complex::new(padded[start + k] * *w, T::zero());
        }
        fft.process(&mut buf);
        for (k, v) in buf.iter().take(cfg.bins()).enumerate() {
            values[[k, f]] = *v;
        }
    }
    Ok(Spectrogram::from_complex(values.view(), *cfg, signal.len()))
}

/// Inverse of [`stft`] for a one-sided complex spectrogram: windowed overlap-add normalized
/// by the summed squared window.
pub fn istft_complex<T: Scalar>(
    values: ArrayView2<'_, Complex<T>>,
    cfg: &StftConfig,
    signal_len: usize,
) -> Result<Vec<T>> {
    cfg.validate()?;
    let frames = cfg.frames(signal_len);
    if values.dim() != (cfg.bins(), frames) {
        return Err(Error::dim(
            "spectrogram shape",
            format!("{:?}", (cfg.bins(), frames)),
            format!("{:?}", values.dim()),
        ));
    }
    let window = hann_periodic::<T>(cfg.window_len);
    let total = cfg.window_len + (frames - 1) * cfg.hop;
    let mut out = vec![T::zero(); total];
    let mut norm = vec![T::zero(); total];
    let ifft = plan::<T>(cfg.fft_size, true);
    let n = cfg.fft_size;
    let scale = T::one() / T::from_usize(n).expect("fft size fits scalar");
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for f in 0..frames {
        // rebuild the Hermitian spectrum; DC and Nyquist must be real
        for k in 0..cfg.bins() {
            let mut v = values[[k, f]];
            if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                v.im = T::zero();
            }
            buf[k] = v;
            if k > 0 && k < n - k {
                buf[n - k] = v.conj();
            }
        }
        ifft.process(&mut buf);
        let start = f * cfg.hop;
        for (k, w) in window.iter().enumerate() {
            out[start + k] += buf[k].re * scale * *w;
            norm[start + k] += *w * *w;
        }
    }
    let tiny = T::of(1e-10);
    let p = cfg.pad();
    Ok((p..p + signal_len)
        .map(|i| if norm[i] > tiny { out[i] / norm[i] } else { T::zero() })
        .collect())
}

/// Inverse transform of a magnitude/phase spectrogram, trimmed to the original length.
pub fn istft<T: Scalar>(spec: &Spectrogram<T>) -> Result<Vec<T>> {
    spec.validate()?;
    istft_complex(spec.to_complex().view(), &spec.config, spec.signal_len)
}

/// Pairs separated magnitudes with the phases of the noisy spectrogram.
pub fn phase_transfer<T: Scalar>(clean_mag: ArrayView2<'_, T>, noisy: &Spectrogram<T>) -> Result<Spectrogram<T>> {
    if clean_mag.dim() != noisy.phases.dim() {
        return Err(Error::dim(
            "phase transfer shape",
            format!("{:?}", noisy.phases.dim()),
            format!("{:?}", clean_mag.dim()),
        ));
    }
    if clean_mag.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::Validation("magnitudes must be finite and non-negative".into()));
    }
    Ok(Spectrogram {
        magnitudes: clean_mag.to_owned(),
        phases: noisy.phases.clone(),
        config: noisy.config,
        signal_len: noisy.signal_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn round_trip() {
        let cfg = StftConfig::default();
        for (len, seed) in [(2048, 1), (2048 + 77, 2), (512, 3)] {
            let x = noise(len, seed);
            let y = istft(&stft(&x, &cfg).unwrap()).unwrap();
            assert_eq!(y.len(), x.len());
            assert!(rel_err(&y, &x) <= 1e-12);
        }
    }

    #[test]
    fn zero_padded_fft() {
        let cfg = StftConfig { window_len: 256, fft_size: 512, hop: 128, sample_rate: 16_000 };
        let x = noise(3000, 4);
        let s = stft(&x, &cfg).unwrap();
        assert_eq!(s.magnitudes.nrows(), 257);
        assert!(rel_err(&istft(&s).unwrap(), &x) <= 1e-12);
    }

    #[test]
    fn bin_centred_sinusoid() {
        let cfg = StftConfig::default();
        let bin = 32;
        let x: Vec<f64> = (0..4096)
            .map(|n| (2.0 * std::f64::consts::PI * bin as f64 * n as f64 / 512.0).sin())
            .collect();
        let s = stft(&x, &cfg).unwrap();
        for f in 2..s.magnitudes.ncols() - 2 {
            let col = s.magnitudes.column(f);
            let total: f64 = col.iter().map(|m| m * m).sum();
            assert!(col[bin] * col[bin] >= 0.9 * total * 0.5, "frame {f}");
            let near: f64 = (bin - 1..=bin + 1).map(|k| col[k] * col[k]).sum();
            assert!(near >= 0.9 * total);
        }
    }

    #[test]
    fn parseval_per_frame() {
        let cfg = StftConfig::default();
        let x = noise(2048, 5);
        let s = stft(&x, &cfg).unwrap();
        let padded = pad_signal(&x, &cfg);
        let w = hann_periodic::<f64>(512);
        let n = cfg.fft_size;
        for f in 0..s.magnitudes.ncols() {
            let time: f64 = (0..512).map(|k| (padded[f * 256 + k] * w[k]).powi(2)).sum();
            let col = s.magnitudes.column(f);
            let spec: f64 = (0..cfg.bins())
                .map(|k| {
                    let e = col[k] * col[k];
                    if k == 0 || k == n / 2 { e } else { 2.0 * e }
                })
                .sum::<f64>()
                / n as f64;
            assert!((time - spec).abs() <= 1e-6 * time);
        }
    }

    #[test]
    fn zeros_and_linearity() {
        let cfg = StftConfig::default();
        let z = stft(&vec![0.0f64; 1024], &cfg).unwrap();
        assert!(z.magnitudes.iter().all(|m| *m == 0.0));
        assert!(istft(&z).unwrap().iter().all(|v| *v == 0.0));

        let a = stft(&noise(1500, 6), &cfg).unwrap().to_complex();
        let b = stft(&noise(1500, 7), &cfg).unwrap().to_complex();
        let sum = istft_complex((&a + &b).view(), &cfg, 1500).unwrap();
        let ya = istft_complex(a.view(), &cfg, 1500).unwrap();
        let yb = istft_complex(b.view(), &cfg, 1500).unwrap();
        for k in 0..1500 {
            assert!((sum[k] - ya[k] - yb[k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn phase_transfer_properties() {
        let cfg = StftConfig::default();
        let x = noise(2000, 8);
        let s = stft(&x, &cfg).unwrap();
        let same = phase_transfer(s.magnitudes.view(), &s).unwrap();
        assert!(rel_err(&istft(&same).unwrap(), &x) <= 1e-12);
        let half = phase_transfer(s.magnitudes.mapv(|m| 0.5 * m).view(), &s).unwrap();
        let y = istft(&half).unwrap();
        assert!(y.iter().zip(&x).all(|(a, b)| (a - 0.5 * b).abs() <= 1e-12));
        let silent = phase_transfer(Array2::zeros(s.magnitudes.dim()).view(), &s).unwrap();
        assert!(istft(&silent).unwrap().iter().all(|v| *v == 0.0));
        assert!(phase_transfer(Array2::<f64>::zeros((3, 3)).view(), &s).is_err());
    }

    #[test]
    fn invalid_inputs() {
        let cfg = StftConfig::default();
        assert!(stft(&[0.0f64; 100], &cfg).is_err());
        let bad = StftConfig { hop: 128, ..cfg };
        assert!(stft(&[0.0f64; 1000], &bad).is_err());
        let short = StftConfig { fft_size: 256, ..cfg };
        assert!(short.validate().is_err());
    }
}
