use std::path::PathBuf;

use clap::Args;
use mdnmf::audio::{istft, phase_transfer, read_wav, stft, write_wav, WavFormat};
use mdnmf::io::read_matrix;
use mdnmf::metrics::{psnr_columns, si_sdr, Db};
use mdnmf::separator::separate;
use mdnmf::{Basis, SeparationConfig};
use ndarray::ArrayView1;
use serde_json::json;

use super::eval::{report_csv, split_list};
use crate::config::Dataset;
use crate::data::{is_wav, load_dataset};
use crate::error::{config_err, CliError, CliResult};
use crate::output::{fmt_stat, Manifest, OutDir};
use crate::Context;

#[derive(Debug, Args)]
pub struct SeparateArgs {
    /// Basis matrix files, one per source, in source order.
    #[arg(long, num_args = 1..)]
    bases: Vec<PathBuf>,
    /// Mixtures: matrix files (columns are items) or WAV files (one item each).
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Ground truth per source, comma-separated when several items; repeat once per source.
    #[arg(long)]
    truth: Vec<String>,
}

pub fn run(ctx: &Context, args: &SeparateArgs) -> CliResult<()> {
    let cfg = ctx.config.as_ref();
    let bases_paths: Vec<PathBuf> = if !args.bases.is_empty() {
        args.bases.clone()
    } else {
        cfg.and_then(|c| c.data.bases.clone())
            .ok_or_else(|| CliError::Usage("--bases or data.bases is required".into()))?
    };
    let input: Vec<PathBuf> = if !args.input.is_empty() {
        args.input.clone()
    } else {
        cfg.and_then(|c| c.data.test_mixed.as_ref().map(|d| d.paths().to_vec()))
            .ok_or_else(|| CliError::Usage("--input or data.test_mixed is required".into()))?
    };
    let truth: Option<Vec<Vec<PathBuf>>> = if !args.truth.is_empty() {
        Some(args.truth.iter().map(|t| split_list(t)).collect())
    } else {
        cfg.and_then(|c| c.data.test_sources.as_ref())
            .map(|list| list.iter().map(|d| d.paths().to_vec()).collect())
    };
    let bases = bases_paths
        .iter()
        .map(|p| Ok(Basis::new(read_matrix(p)?)?))
        .collect::<CliResult<Vec<_>>>()?;
    if let Some(t) = &truth {
        if t.len() != bases.len() {
            return Err(config_err(format!("{} ground-truth sources for {} bases", t.len(), bases.len())));
        }
    }
    let sep = cfg.map(|c| c.separation.clone()).unwrap_or_default();
    let stft_cfg = cfg.map(|c| c.stft).unwrap_or_default();
    let weights = match cfg {
        Some(c) => c.metric_weights(bases.len())?,
        None => vec![1.0; bases.len()],
    };
    let peak = cfg.map_or(1.0, |c| c.peak);

    let mut out = OutDir::create(&ctx.out)?;
    let audio = input.iter().all(|p| is_wav(p));
    let scores: Option<Vec<Vec<Db>>> = if audio {
        let mut scores: Vec<Vec<Db>> = vec![Vec::new(); bases.len()];
        for (k, path) in input.iter().enumerate() {
            let (signal, rate) = read_wav(path)?;
            if rate != stft_cfg.sample_rate {
                return Err(config_err(format!("{} has sample rate {rate}, expected {}", path.display(), stft_cfg.sample_rate)));
            }
            let spec = stft(&signal, &stft_cfg)?;
            let result = separate(&bases, spec.magnitudes.view(), &sep)?;
            for (i, comp) in result.components.iter().enumerate() {
                let y = istft(&phase_transfer(comp.view(), &spec)?)?;
                let name = format!("item_{k}_source_{i}.wav");
                write_wav(&out.external(&name), &y, rate, WavFormat::Float32)?;
                if let Some(t) = &truth {
                    let reference = t[i]
                        .get(k)
                        .ok_or_else(|| config_err(format!("source {i} lacks ground truth for item {k}")))?;
                    let (r, _) = read_wav(reference)?;
                    if r.len() != y.len() {
                        return Err(config_err(format!("{} has {} samples, expected {}", reference.display(), r.len(), y.len())));
                    }
                    scores[i].push(si_sdr(ArrayView1::from(&r), ArrayView1::from(&y))?);
                }
            }
        }
        truth.is_some().then_some(scores)
    } else {
        let v = load_dataset(&Dataset::Many(input.clone()), &stft_cfg)?;
        let result = separate(&bases, v.view(), &sep)?;
        for (i, comp) in result.components.iter().enumerate() {
            out.matrix(&format!("source_{i}.nmf"), comp)?;
        }
        match &truth {
            Some(t) => Some(
                t.iter()
                    .zip(&result.components)
                    .map(|(paths, comp)| {
                        let r = load_dataset(&Dataset::Many(paths.clone()), &stft_cfg)?;
                        if r.dim() != comp.dim() {
                            return Err(config_err(format!(
                                "ground truth shape {:?} differs from mixture shape {:?}",
                                r.dim(),
                                comp.dim()
                            )));
                        }
                        Ok(psnr_columns(r.view(), comp.view(), peak)?)
                    })
                    .collect::<CliResult<Vec<_>>>()?,
            ),
            None => None,
        }
    };

    let mut details = json!({ "audio": audio, "separation": sep_json(&sep) });
    if let Some(scores) = &scores {
        let (csv, report, _) = report_csv(scores, &weights, None)?;
        out.bytes("report.csv", &csv)?;
        println!("median {}", fmt_stat(report.median));
        details["median"] = json!(report.median);
        details["metric"] = json!(if audio { "si_sdr" } else { "psnr" });
    }
    let mut manifest = Manifest::new("separate", ctx.seed);
    manifest.inputs = bases_paths.into_iter().chain(input).collect();
    if let Some(c) = cfg {
        manifest.config = serde_json::to_value(c)?;
    }
    manifest.details = details;
    out.finish(manifest)
}

fn sep_json(sep: &SeparationConfig<f64>) -> serde_json::Value {
    serde_json::to_value(sep).unwrap_or_default()
}
