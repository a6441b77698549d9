//! Seeded synthetic data standing in for the image and audio corpora: digit-like 28x28
//! images of zeros and ones, harmonic "speech" and coloured "noise" at 16 kHz.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trainer::init::rng_for;

pub const IMAGE_SIDE: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Digit {
    /// Slanted elliptic rings.
    Zero,
    /// Slanted strokes, some with a flag at the top and a foot at the bottom.
    One,
}

fn stroke(d: f64, width: f64) -> f64 {
    (-(d * d) / (2.0 * width * width)).exp()
}

/// Distance from `(x, y)` to the segment `a`-`b`.
fn segment_distance(x: f64, y: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((x - a.0) * dx + (y - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    ((x - a.0 - t * dx).powi(2) + (y - a.1 - t * dy).powi(2)).sqrt()
}

fn render<R: Rng>(digit: Digit, rng: &mut R) -> Vec<f64> {
    let c = (IMAGE_SIDE as f64 - 1.0) / 2.0;
    let cx = c + rng.random_range(-2.5..2.5);
    let cy = c + rng.random_range(-2.0..2.0);
    let slant = rng.random_range(-0.45..0.45);
    let width = rng.random_range(0.7..1.8);
    let gain = rng.random_range(0.8..1.0);
    let mut img = vec![0.0; IMAGE_SIDE * IMAGE_SIDE];
    match digit {
        Digit::Zero => {
            let ry = rng.random_range(7.0..10.5);
            let rx = rng.random_range(3.0..7.0);
            // low-order wobble of the outline
            let (e1, p1) = (rng.random_range(0.0..0.15), rng.random_range(0.0..2.0 * PI));
            let (e2, p2) = (rng.random_range(0.0..0.12), rng.random_range(0.0..2.0 * PI));
            for y in 0..IMAGE_SIDE {
                for x in 0..IMAGE_SIDE {
                    let yy = y as f64 - cy;
                    let xx = x as f64 - cx - slant * yy;
                    let theta = yy.atan2(xx);
                    let wobble = 1.0 + e1 * (theta + p1).cos() + e2 * (2.0 * theta + p2).cos();
                    let r = ((xx / rx).powi(2) + (yy / ry).powi(2)).sqrt() / wobble;
                    // radial distance to the ellipse, in pixels
                    let d = (r - 1.0) * (rx * ry).sqrt();
                    img[y * IMAGE_SIDE + x] = gain * stroke(d, width);
                }
            }
        }
        Digit::One => {
            let half = rng.random_range(7.5..11.0);
            let cx = cx + rng.random_range(-3.0..3.0);
            let top = (cx + slant * -half, cy - half);
            let bottom = (cx + slant * half, cy + half);
            // bend the stroke through an offset midpoint
            let bend = rng.random_range(-1.5..1.5);
            let mid = (cx + bend, cy);
            let flag = rng.random_bool(0.5).then(|| (top.0 - rng.random_range(2.5..4.5), top.1 + rng.random_range(2.0..4.0)));
            let foot = rng.random_bool(0.3).then(|| rng.random_range(2.5..4.5));
            for y in 0..IMAGE_SIDE {
                for x in 0..IMAGE_SIDE {
                    let (xf, yf) = (x as f64, y as f64);
                    let mut d = segment_distance(xf, yf, top, mid).min(segment_distance(xf, yf, mid, bottom));
                    if let Some(f) = flag {
                        d = d.min(segment_distance(xf, yf, top, f));
                    }
                    if let Some(w) = foot {
                        d = d.min(segment_distance(xf, yf, (bottom.0 - w, bottom.1), (bottom.0 + w, bottom.1)));
                    }
                    img[y * IMAGE_SIDE + x] = gain * stroke(d, width);
                }
            }
        }
    }
    img
}

/// `count` images of `digit` as columns of a 784 x count matrix with pixels in [0, 1]
/// (row-major pixel order).
pub fn digit_images<T: Scalar>(digit: Digit, count: usize, seed: u64) -> Array2<T> {
    let stream = match digit {
        Digit::Zero => 10,
        Digit::One => 11,
    };
    let mut rng = rng_for(seed, stream);
    let mut out = Array2::zeros((IMAGE_SIDE * IMAGE_SIDE, count));
    for mut col in out.columns_mut() {
        for (dst, v) in col.iter_mut().zip(render(digit, &mut rng)) {
            *dst = T::of(v.clamp(0.0, 1.0));
        }
    }
    out
}

/// Voice of a synthetic speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct Speaker {
    /// Mean fundamental frequency in Hz.
    pub pitch: f64,
    /// Formant centre frequencies in Hz.
    pub formants: Vec<f64>,
}

impl Speaker {
    /// A small, fixed panel of distinct voices; `k` wraps around.
    pub fn preset(k: usize) -> Speaker {
        let panel = [
            (110.0, vec![700.0, 1200.0, 2600.0]),
            (210.0, vec![500.0, 1700.0, 2900.0]),
            (150.0, vec![350.0, 2000.0, 3100.0]),
            (260.0, vec![850.0, 1400.0, 3300.0]),
        ];
        let (pitch, formants) = panel[k % panel.len()].clone();
        Speaker { pitch, formants }
    }
}

/// Synthetic "speech": syllables separated by short pauses. Most syllables are voiced (a
/// drifting-pitch harmonic series under a formant envelope, plus breath noise); the rest are
/// unvoiced high-pass noise bursts. Peak-normalized to 0.5.
pub fn speech_signal(speaker: &Speaker, samples: usize, sample_rate: f64, seed: u64) -> Result<Vec<f64>> {
    if sample_rate <= 0.0 || speaker.pitch <= 0.0 {
        return Err(Error::Config("sample rate and pitch must be positive".into()));
    }
    let mut rng = rng_for(seed, 20);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = vec![0.0; samples];
    let nyquist = sample_rate / 2.0;
    let mut start = 0usize;
    while start < samples {
        let len = ((rng.random_range(0.12..0.3)) * sample_rate) as usize;
        let gap = ((rng.random_range(0.02..0.08)) * sample_rate) as usize;
        let voiced = rng.random_bool(0.75);
        let f0 = speaker.pitch * rng.random_range(0.97..1.03);
        let glide = rng.random_range(-0.03..0.03);
        let shift = rng.random_range(0.97..1.03);
        let breath = rng.random_range(0.05..0.2);
        let mut phase = 0.0;
        let mut prev = [0.0; 2];
        for t in 0..len.min(samples - start) {
            let p = t as f64 / len as f64;
            let env = (PI * p).sin().powi(2);
            let w: f64 = normal.sample(&mut rng);
            // second difference: a crude high-pass
            let hiss = w - 2.0 * prev[0] + prev[1];
            prev = [w, prev[0]];
            if !voiced {
                out[start + t] = 0.3 * env * hiss;
                continue;
            }
            let f = f0 * (1.0 + glide * p);
            phase += 2.0 * PI * f / sample_rate;
            let mut v = 0.0;
            let mut h = 1;
            while (h as f64) * f < nyquist {
                let fh = h as f64 * f;
                let amp: f64 = speaker
                    .formants
                    .iter()
                    .map(|&fm| (-((fh - fm * shift) / (0.15 * fm)).powi(2)).exp())
                    .sum::<f64>()
                    + 0.05 / h as f64;
                v += amp * (h as f64 * phase).sin();
                h += 1;
            }
            out[start + t] = env * (v + breath * w);
        }
        start += len + gap;
    }
    normalize_peak(&mut out, 0.5);
    Ok(out)
}

/// Environmental "noise": a low-passed Gaussian background with a sequence of overlapping
/// events, each either a harmonic tone complex (random pitch, fixed during the event) or a
/// band-pass noise burst. Peak-normalized to 0.5.
pub fn noise_signal(samples: usize, sample_rate: f64, seed: u64) -> Result<Vec<f64>> {
    if sample_rate <= 0.0 {
        return Err(Error::Config("sample rate must be positive".into()));
    }
    let mut rng = rng_for(seed, 21);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = vec![0.0; samples];
    let mut lp = 0.0;
    for v in out.iter_mut() {
        lp = 0.9 * lp + 0.1 * normal.sample(&mut rng);
        *v = lp;
    }
    let mut start = 0usize;
    while start < samples {
        let len = (rng.random_range(0.1..0.4) * sample_rate) as usize;
        let amp = rng.random_range(0.5..1.5);
        let end = (start + len).min(samples);
        if rng.random_bool(0.5) {
            let f0 = rng.random_range(80.0..400.0);
            let count = ((4000.0 / f0) as usize).max(1);
            let phases: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            for (k, o) in out[start..end].iter_mut().enumerate() {
                let p = k as f64 / len as f64;
                let t = (start + k) as f64 / sample_rate;
                let env = (PI * p).sin();
                let v: f64 = phases
                    .iter()
                    .enumerate()
                    .map(|(h, ph)| (2.0 * PI * f0 * (h + 1) as f64 * t + ph).sin() / (h + 1) as f64)
                    .sum();
                *o += amp * env * v;
            }
        } else {
            let centre = rng.random_range(300.0..6000.0);
            let (a1, a2) = {
                let r: f64 = 0.97;
                (2.0 * r * (2.0 * PI * centre / sample_rate).cos(), r * r)
            };
            let (mut y1, mut y2) = (0.0, 0.0);
            for (k, o) in out[start..end].iter_mut().enumerate() {
                let p = k as f64 / len as f64;
                let y = 0.2 * normal.sample(&mut rng) + a1 * y1 - a2 * y2;
                y2 = y1;
                y1 = y;
                *o += amp * (PI * p).sin() * y;
            }
        }
        start += (len as f64 * rng.random_range(0.5..1.0)) as usize;
    }
    normalize_peak(&mut out, 0.5);
    Ok(out)
}

fn normalize_peak(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn images_are_seeded_and_bounded() {
        let a: Array2<f64> = digit_images(Digit::Zero, 5, 1);
        assert_eq!(a.dim(), (784, 5));
        assert_eq!(a, digit_images::<f64>(Digit::Zero, 5, 1));
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(a.columns().into_iter().all(|c| c.sum() > 10.0));
    }

    #[test]
    fn zeros_have_hollow_centres_and_ones_do_not() {
        let centre = 14 * IMAGE_SIDE + 14;
        let z: Array2<f64> = digit_images(Digit::Zero, 20, 2);
        let o: Array2<f64> = digit_images(Digit::One, 20, 2);
        let zc: f64 = z.row(centre).mean().unwrap();
        let oc: f64 = o.row(centre).mean().unwrap();
        assert!(zc < 0.1 && oc > 0.3, "{zc} {oc}");
    }

    #[test]
    fn audio_fixtures() {
        let s = speech_signal(&Speaker::preset(0), 8000, 16000.0, 3).unwrap();
        let n = noise_signal(8000, 16000.0, 3).unwrap();
        assert_eq!(s, speech_signal(&Speaker::preset(0), 8000, 16000.0, 3).unwrap());
        let peak = |x: &[f64]| x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((peak(&s) - 0.5).abs() < 1e-12 && (peak(&n) - 0.5).abs() < 1e-12);
        assert!(s.contains(&0.0), "pauses expected");
    }
}
