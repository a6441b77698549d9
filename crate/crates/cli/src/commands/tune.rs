use mdnmf::trainer::TrainConfig;
use mdnmf::tuning::{fold_split, kfold_indices, random_search, Fold, ParamSet};
use mdnmf::{SeparationConfig, Variant};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{config_err, CliResult};
use crate::output::{Manifest, OutDir};
use crate::pipeline::{fit, load_test_data, load_training_data, separate_and_score, Strong};
use crate::Context;

/// Applies sampled hyperparameters. Weights the mode fixes are left at their preset.
fn apply(
    mode: Variant,
    params: &ParamSet,
    tc: &mut TrainConfig<f64>,
    sep: &mut SeparationConfig<f64>,
) -> mdnmf::Result<()> {
    let preset = mode.preset::<f64>();
    for (name, value) in params {
        let v = value.as_f64();
        match name.as_str() {
            "sparsity" => {
                tc.sparsity = v;
                tc.source_sparsity = None;
            }
            "test_sparsity" => {
                sep.sparsity = v;
                sep.source_sparsity = None;
            }
            "gamma" => tc.gamma = v,
            "tau_w" if mode == Variant::DMdnmf => tc.weights.weak = v,
            "tau_a" if preset.adversarial > 0.0 || mode == Variant::Semi => tc.weights.adversarial = v,
            "tau_s" if preset.strong > 0.0 && preset.weak > 0.0 => tc.weights.strong = v,
            "tau_w" | "tau_a" | "tau_s" => {}
            "epochs" if mode != Variant::Enmf => tc.epochs = v.round() as usize,
            "epochs" => {}
            "batch" => {
                let b = (v.round() as usize).max(1);
                tc.batch.weak = Some(b);
                tc.batch.adversarial = Some(b);
                tc.batch.strong = Some(b);
            }
            other => return Err(mdnmf::Error::Config(format!("unknown hyperparameter `{other}`"))),
        }
    }
    mode.check_config(tc)
}

pub fn run(ctx: &Context) -> CliResult<()> {
    let cfg: &ExperimentConfig = ctx.require_config()?;
    let base_tc = cfg.train_config()?;
    let data = load_training_data(cfg)?;
    let sources = cfg.source_count();
    let weights = cfg.metric_weights(sources)?;

    let folds = match cfg.search.folds {
        Some(k) => {
            let strong = data
                .strong
                .as_ref()
                .ok_or_else(|| config_err("cross-validated tuning scores on data.strong_sources / data.strong_mixed"))?;
            Some(kfold_indices(strong.cols(), k, cfg.seed)?)
        }
        None => None,
    };
    let test = if folds.is_none() { Some(load_test_data(cfg)?) } else { None };

    let evaluate = |params: &ParamSet, fold: Option<Fold>| -> mdnmf::Result<f64> {
        let mut tc = base_tc.clone();
        let mut sep = cfg.separation.clone();
        apply(cfg.mode, params, &mut tc, &mut sep)?;
        tc.parallel = false;
        let (train_strong, validation): (Option<Strong>, Strong) = match (fold, &folds, &data.strong) {
            (Some(f), Some(folds), Some(strong)) => {
                let (train_idx, val_idx) = fold_split(folds, f.index);
                (Some(strong.select(&train_idx)), strong.select(&val_idx))
            }
            _ => (data.strong.clone(), test.clone().expect("test data loaded without folds")),
        };
        let run = || -> CliResult<f64> {
            let fitted = fit(cfg, &tc, &data, train_strong.as_ref())?;
            Ok(separate_and_score(&fitted.bases, &validation, &sep, &weights, cfg.peak)?.median)
        };
        run().map_err(|e| mdnmf::Error::Search(e.to_string()))
    };
    let outcome = random_search(&cfg.search, cfg.seed, evaluate)?;
    let best = outcome.best_trial();
    let mut best_tc = base_tc.clone();
    let mut best_sep = cfg.separation.clone();
    apply(cfg.mode, &best.params, &mut best_tc, &mut best_sep)?;

    let mut out = OutDir::create(&ctx.out)?;
    out.bytes("trials.csv", outcome.trials_csv()?.as_bytes())?;
    out.json(
        "best.json",
        &json!({
            "trial": best.trial,
            "score": best.mean_score,
            "params": best.params,
            "train": best_tc,
            "separation": best_sep,
        }),
    )?;
    println!("best trial {} score {:.6}", best.trial, best.mean_score);
    let mut manifest = Manifest::new("tune", cfg.seed);
    manifest.config = serde_json::to_value(cfg)?;
    manifest.details = json!({ "trials": outcome.trials.len(), "folds": cfg.search.folds, "best": best.trial });
    out.finish(manifest)
}
