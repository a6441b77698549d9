use std::path::{Path, PathBuf};

use clap::Args;
use mdnmf::audio::read_wav;
use mdnmf::metrics::{aggregate, psnr_columns, si_sdr, Db, MetricReport};
use mdnmf::io::read_matrix_raw;
use ndarray::ArrayView1;
use serde_json::json;

use crate::data::is_wav;
use crate::error::{config_err, CliError, CliResult};
use crate::output::{csv_bytes, fmt_stat, Manifest, OutDir};
use crate::Context;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Estimates per source: a matrix file (one item per column) or comma-separated WAV files
    /// (one item each). Repeat once per source.
    #[arg(long, required = true)]
    estimates: Vec<String>,
    /// References, laid out like the estimates.
    #[arg(long, required = true)]
    references: Vec<String>,
    /// Baseline estimates, laid out like the estimates; adds Δ rows.
    #[arg(long)]
    baseline: Vec<String>,
    /// Comma-separated source weights; uniform by default.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    /// Peak value for PSNR.
    #[arg(long)]
    peak: Option<f64>,
}

pub fn split_list(arg: &str) -> Vec<PathBuf> {
    arg.split(',').filter(|s| !s.is_empty()).map(PathBuf::from).collect()
}

/// Scores of one source: PSNR per matrix column, or SI-SDR per WAV file.
pub fn score_files(estimates: &[PathBuf], references: &[PathBuf], peak: f64) -> CliResult<Vec<Db>> {
    if estimates.len() != references.len() {
        return Err(config_err(format!(
            "{} estimate files for {} reference files",
            estimates.len(),
            references.len()
        )));
    }
    let wav = |p: &Path| is_wav(p);
    if estimates.iter().all(|p| wav(p)) && references.iter().all(|p| wav(p)) {
        return estimates
            .iter()
            .zip(references)
            .map(|(e, r)| {
                let (e, _) = read_wav(e)?;
                let (r, _) = read_wav(r)?;
                if e.len() != r.len() {
                    return Err(config_err(format!("signal lengths differ: {} vs {}", e.len(), r.len())));
                }
                Ok(si_sdr(ArrayView1::from(&r), ArrayView1::from(&e))?)
            })
            .collect();
    }
    if estimates.len() != 1 {
        return Err(CliError::Usage("matrix estimates take one file per source".into()));
    }
    let e = read_matrix_raw(&estimates[0])?;
    let r = read_matrix_raw(&references[0])?;
    if e.dim() != r.dim() {
        return Err(config_err(format!("estimate shape {:?} differs from reference shape {:?}", e.dim(), r.dim())));
    }
    Ok(psnr_columns(r.view(), e.view(), peak)?)
}

fn stat_rows(label: &str, cols: usize, values: &[String]) -> Vec<String> {
    let mut row = vec![label.to_string()];
    row.extend(std::iter::repeat_n(String::new(), cols));
    row.extend(values.iter().cloned());
    row
}

/// Report CSV: one row per item with the active sources' scores and their weighted mean, then
/// summary rows. Sources with weight zero are left out.
pub fn report_csv(
    scores: &[Vec<Db>],
    weights: &[f64],
    baseline: Option<&[Vec<Db>]>,
) -> CliResult<(Vec<u8>, MetricReport, Option<MetricReport>)> {
    let report = aggregate(scores, weights)?;
    let base = baseline.map(|b| aggregate(b, weights)).transpose()?;
    if let Some(b) = &base {
        if b.items.len() != report.items.len() {
            return Err(config_err(format!(
                "baseline has {} items, estimates have {}",
                b.items.len(),
                report.items.len()
            )));
        }
    }
    let active: Vec<usize> = (0..scores.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut header: Vec<String> = vec!["item".into()];
    header.extend(active.iter().map(|i| format!("source_{i}")));
    header.push("weighted".into());
    if base.is_some() {
        header.push("baseline".into());
    }
    let mut rows = Vec::new();
    for (k, item) in report.items.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(active.iter().map(|&i| scores[i][k].to_string()));
        row.push(item.to_string());
        if let Some(b) = &base {
            row.push(b.items[k].to_string());
        }
        rows.push(row);
    }
    let stats = |f: &dyn Fn(&MetricReport) -> String| -> Vec<String> {
        let mut v = vec![f(&report)];
        if let Some(b) = &base {
            v.push(f(b));
        }
        v
    };
    let n = active.len();
    rows.push(stat_rows("mean", n, &stats(&|r| fmt_stat(r.mean))));
    rows.push(stat_rows("median", n, &stats(&|r| fmt_stat(r.median))));
    rows.push(stat_rows("standard_error", n, &stats(&|r| fmt_stat(r.standard_error))));
    rows.push(stat_rows("exact_count", n, &stats(&|r| r.exact_count.to_string())));
    if let Some(b) = &base {
        rows.push(stat_rows("delta_median", n, &[fmt_stat(report.median - b.median), String::new()]));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok((csv_bytes(&header_refs, &rows)?, report, base))
}

pub fn run(ctx: &Context, args: &EvalArgs) -> CliResult<()> {
    let s = args.estimates.len();
    if args.references.len() != s {
        return Err(config_err(format!("{s} estimate sources for {} reference sources", args.references.len())));
    }
    if !args.baseline.is_empty() && args.baseline.len() != s {
        return Err(config_err(format!("{} baseline sources for {s} estimate sources", args.baseline.len())));
    }
    let weights = if !args.weights.is_empty() {
        args.weights.clone()
    } else if let Some(c) = &ctx.config {
        c.metric_weights(s)?
    } else {
        vec![1.0; s]
    };
    let peak = args.peak.or(ctx.config.as_ref().map(|c| c.peak)).unwrap_or(1.0);
    let per_source = |list: &[String]| -> CliResult<Vec<Vec<Db>>> {
        list.iter()
            .zip(&args.references)
            .map(|(e, r)| score_files(&split_list(e), &split_list(r), peak))
            .collect()
    };
    let scores = per_source(&args.estimates)?;
    let baseline = if args.baseline.is_empty() { None } else { Some(per_source(&args.baseline)?) };
    let (csv, report, base) = report_csv(&scores, &weights, baseline.as_deref())?;

    let mut out = OutDir::create(&ctx.out)?;
    out.bytes("report.csv", &csv)?;
    println!("median {}", fmt_stat(report.median));
    if let Some(b) = &base {
        println!("delta_median {}", fmt_stat(report.median - b.median));
    }
    let mut manifest = Manifest::new("eval", ctx.seed);
    manifest.inputs = [&args.estimates, &args.references, &args.baseline]
        .into_iter()
        .flatten()
        .flat_map(|a| split_list(a))
        .collect();
    manifest.details = json!({ "weights": weights, "peak": peak, "median": report.median });
    out.finish(manifest)
}
