use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mdnmf::adversarial::mix_matrices;
use mdnmf::audio::{mix_at_snr, read_wav, write_wav, StftConfig, WavFormat};
use mdnmf::synthetic::{digit_images, noise_signal, speech_signal, Digit, Speaker};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::data::{columns, is_wav, load_matrix};
use crate::error::{config_err, CliError, CliResult};
use crate::output::{Manifest, OutDir};
use crate::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    /// Synthetic 28x28 zeros and ones.
    Digits,
    /// A synthetic voiced/unvoiced speech clip and an event-noise clip.
    Speech,
}

#[derive(Debug, Args)]
pub struct SynthMixArgs {
    /// Source datasets (image mode) or a speech and a noise WAV file (audio mode).
    #[arg(long, num_args = 1..)]
    sources: Vec<PathBuf>,
    /// Generate synthetic sources instead of reading them.
    #[arg(long, value_enum)]
    generate: Option<Fixture>,
    /// Comma-separated mixing weights for image mode; uniform by default.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    /// Audio mode: scale the noise to this speech-to-noise ratio in dB.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Number of mixtures (image mode) or images generated per source.
    #[arg(long)]
    count: Option<usize>,
    /// Speaker preset of generated speech.
    #[arg(long, default_value_t = 0)]
    speaker: usize,
    /// Duration of generated clips in seconds.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
}

pub fn run(ctx: &Context, args: &SynthMixArgs) -> CliResult<()> {
    let audio = args.generate == Some(Fixture::Speech)
        || args.snr_db.is_some()
        || (!args.sources.is_empty() && args.sources.iter().all(|p| is_wav(p)));
    if args.generate.is_some() && !args.sources.is_empty() {
        return Err(CliError::Usage("use either --sources or --generate".into()));
    }
    if args.generate.is_none() && args.sources.is_empty() {
        return Err(CliError::Usage("--sources or --generate is required".into()));
    }
    if audio {
        audio_mix(ctx, args)
    } else {
        image_mix(ctx, args)
    }
}

fn image_mix(ctx: &Context, args: &SynthMixArgs) -> CliResult<()> {
    let stft_cfg = StftConfig::default();
    let sources: Vec<Array2<f64>> = match args.generate {
        Some(_) => {
            let n = args.count.unwrap_or(500);
            vec![digit_images(Digit::Zero, n, ctx.seed), digit_images(Digit::One, n, ctx.seed.wrapping_add(1))]
        }
        None => args.sources.iter().map(|p| load_matrix(p, &stft_cfg)).collect::<CliResult<_>>()?,
    };
    let s = sources.len();
    let weights = if args.weights.is_empty() { vec![1.0 / s as f64; s] } else { args.weights.clone() };
    if weights.len() != s {
        return Err(config_err(format!("{} weights for {s} sources", weights.len())));
    }
    let m = sources[0].nrows();
    if let Some(i) = sources.iter().position(|u| u.nrows() != m) {
        return Err(config_err(format!("source {i} has {} features, source 0 has {m}", sources[i].nrows())));
    }
    let available = sources.iter().map(|u| u.ncols()).min().unwrap_or(0);
    let n = args.count.map_or(available, |c| c.min(available));
    if n == 0 {
        return Err(config_err("sources contain no columns"));
    }
    let picked: Vec<Array2<f64>> = sources
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let mut idx: Vec<usize> = (0..u.ncols()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            rng.set_stream(i as u64 + 1);
            idx.shuffle(&mut rng);
            idx.truncate(n);
            columns(u, &idx)
        })
        .collect();
    let views: Vec<_> = picked.iter().map(|p| p.view()).collect();
    let mixed = mix_matrices(&weights, &views)?;

    let mut out = OutDir::create(&ctx.out)?;
    out.matrix("mixed.nmf", &mixed)?;
    for (i, (u, a)) in picked.iter().zip(&weights).enumerate() {
        out.matrix(&format!("source_{i}.nmf"), u)?;
        out.matrix(&format!("truth_{i}.nmf"), &u.mapv(|x| a * x))?;
    }
    let mut manifest = Manifest::new("synth-mix", ctx.seed);
    manifest.inputs = args.sources.clone();
    manifest.details = json!({
        "mode": "image",
        "generated": args.generate.map(|_| "digits"),
        "weights": weights,
        "count": n,
        "features": m,
    });
    out.finish(manifest)
}

fn audio_mix(ctx: &Context, args: &SynthMixArgs) -> CliResult<()> {
    let snr_db = args.snr_db.unwrap_or(3.0);
    let (speech, noise, rate) = match args.generate {
        Some(Fixture::Speech) => {
            let rate = 16_000u32;
            let samples = (args.duration * rate as f64).round() as usize;
            let speaker = Speaker::preset(args.speaker);
            let speech = speech_signal(&speaker, samples, rate as f64, ctx.seed)?;
            let noise = noise_signal(samples, rate as f64, ctx.seed.wrapping_add(1))?;
            (speech, noise, rate)
        }
        Some(Fixture::Digits) => return Err(CliError::Usage("--snr-db applies to audio only".into())),
        None => {
            if args.sources.len() != 2 || !args.sources.iter().all(|p| is_wav(p)) {
                return Err(CliError::Usage("audio mode needs --sources SPEECH.wav NOISE.wav".into()));
            }
            let (speech, rs) = read_wav(&args.sources[0])?;
            let (mut noise, rn) = read_wav(&args.sources[1])?;
            if rs != rn {
                return Err(config_err(format!("sample rates differ: {rs} vs {rn}")));
            }
            if noise.len() < speech.len() {
                return Err(config_err(format!(
                    "noise has {} samples, speech needs {}",
                    noise.len(),
                    speech.len()
                )));
            }
            noise.truncate(speech.len());
            (speech, noise, rs)
        }
    };
    let mix = mix_at_snr(&speech, &noise, snr_db)?;
    let mut out = OutDir::create(&ctx.out)?;
    for (name, samples) in [("mixture.wav", &mix.mixture), ("speech.wav", &speech), ("noise.wav", &mix.noise)] {
        let path = out.external(name);
        write_wav(&path, samples, rate, WavFormat::Float32)?;
    }
    let mut manifest = Manifest::new("synth-mix", ctx.seed);
    manifest.inputs = args.sources.clone();
    manifest.details = json!({
        "mode": "audio",
        "generated": args.generate.map(|_| "speech"),
        "speaker": args.generate.map(|_| args.speaker),
        "snr_db": snr_db,
        "scale": mix.scale,
        "sample_rate": rate,
        "samples": speech.len(),
    });
    out.finish(manifest)
}
