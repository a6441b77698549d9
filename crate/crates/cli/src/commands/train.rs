use serde_json::json;

use crate::error::CliResult;
use crate::output::{Manifest, OutDir};
use crate::pipeline::{fit, load_training_data};
use crate::Context;

pub fn run(ctx: &Context) -> CliResult<()> {
    let cfg = ctx.require_config()?;
    let tc = cfg.train_config()?;
    let data = load_training_data(cfg)?;
    let fitted = fit(cfg, &tc, &data, data.strong.as_ref())?;

    let mut out = OutDir::create(&ctx.out)?;
    let mut finals = Vec::new();
    for (i, (basis, trace)) in fitted.bases.iter().zip(&fitted.traces).enumerate() {
        out.matrix(&format!("basis_{i}.nmf"), basis.matrix())?;
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        out.bytes(&format!("trace_{i}.csv"), &buf)?;
        let mut buf = Vec::new();
        trace.write_timing_csv(&mut buf)?;
        out.bytes(&format!("timing_{i}.csv"), &buf)?;
        let last = trace.final_loss().unwrap_or(trace.initial_loss);
        log::info!("source {i}: {} atoms, final loss {last:e}", basis.atoms());
        finals.push(last);
    }
    let mut manifest = Manifest::new("train", cfg.seed);
    manifest.config = serde_json::to_value(cfg)?;
    manifest.details = json!({
        "mode": cfg.mode,
        "train": tc,
        "final_losses": finals,
        "nondeterministic_outputs": (0..fitted.bases.len()).map(|i| format!("timing_{i}.csv")).collect::<Vec<_>>(),
    });
    out.finish(manifest)
}
