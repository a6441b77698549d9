use std::path::PathBuf;

use clap::Args;
use mdnmf::trainer::ConvergenceTrace;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::{csv_bytes, Manifest, OutDir};
use crate::Context;

/// Relative increase tolerated before a trace counts as non-monotone.
const MONOTONE_SLACK: f64 = 1e-10;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trace CSV files, or directories whose `trace_*.csv` files are read.
    #[arg(long, num_args = 1.., required = true)]
    traces: Vec<PathBuf>,
}

fn expand(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| mdnmf::Error::Io { path: p.clone(), source: e })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("trace_") && n.ends_with(".csv"))
                })
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no trace files found".into()));
    }
    Ok(out)
}

pub fn run(ctx: &Context, args: &ReportArgs) -> CliResult<()> {
    let files = expand(&args.traces)?;
    let mut rows = Vec::new();
    let mut all_monotone = true;
    for f in &files {
        let file = std::fs::File::open(f).map_err(|e| mdnmf::Error::Io { path: f.clone(), source: e })?;
        let trace = ConvergenceTrace::read_csv(file)?;
        let worst = trace.worst_relative_increase();
        let monotone = worst <= MONOTONE_SLACK;
        all_monotone &= monotone;
        rows.push(vec![
            f.display().to_string(),
            trace.records.len().to_string(),
            format!("{:e}", trace.initial_loss),
            format!("{:e}", trace.final_loss().unwrap_or(trace.initial_loss)),
            format!("{worst:e}"),
            monotone.to_string(),
        ]);
        println!("{}: worst relative increase {worst:e} ({})", f.display(), if monotone { "monotone" } else { "NOT monotone" });
    }
    let csv = csv_bytes(
        &["file", "epochs", "initial_loss", "final_loss", "worst_relative_increase", "monotone"],
        &rows,
    )?;
    let mut out = OutDir::create(&ctx.out)?;
    out.bytes("convergence.csv", &csv)?;
    let mut manifest = Manifest::new("convergence-report", ctx.seed);
    manifest.inputs = files;
    manifest.details = json!({ "slack": MONOTONE_SLACK, "all_monotone": all_monotone });
    out.finish(manifest)
}
