//! Data assembly and fitting shared by `train` and `tune`.

use mdnmf::adversarial::{assemble_adversarial, AdversarialSpec, MixingSpec, ScaledDataset};
use mdnmf::metrics::{aggregate, psnr_columns, MetricReport};
use mdnmf::separator::separate;
use mdnmf::trainer::{train, train_semi_supervised, ConvergenceTrace, SourceBundle, TrainConfig, TrainingSet};
use mdnmf::{Basis, SeparationConfig, Variant};
use ndarray::{concatenate, Array1, Array2, Axis};

use crate::config::ExperimentConfig;
use crate::data::{columns, load_all, load_dataset};
use crate::error::{config_err, CliResult};

/// Strong supervision: components per source and their mixtures, column-aligned.
#[derive(Debug, Clone)]
pub struct Strong {
    pub sources: Vec<Array2<f64>>,
    pub mixed: Array2<f64>,
}

impl Strong {
    pub fn cols(&self) -> usize {
        self.mixed.ncols()
    }

    pub fn select(&self, idx: &[usize]) -> Strong {
        Strong {
            sources: self.sources.iter().map(|s| columns(s, idx)).collect(),
            mixed: columns(&self.mixed, idx),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingData {
    pub weak: Vec<Array2<f64>>,
    pub adversarial: Option<Vec<Array2<f64>>>,
    pub mixed: Option<Array2<f64>>,
    pub strong: Option<Strong>,
}

pub fn load_training_data(cfg: &ExperimentConfig) -> CliResult<TrainingData> {
    cfg.require_training_data()?;
    let d = &cfg.data;
    let weak = load_all(&d.sources, &cfg.stft)?;
    let adversarial = d.adversarial.as_ref().map(|a| load_all(a, &cfg.stft)).transpose()?;
    let mixed = d.mixed.as_ref().map(|m| load_dataset(m, &cfg.stft)).transpose()?;
    let strong = match (&d.strong_sources, &d.strong_mixed) {
        (Some(s), Some(m)) => {
            let strong = Strong { sources: load_all(s, &cfg.stft)?, mixed: load_dataset(m, &cfg.stft)? };
            if let Some(i) = strong.sources.iter().position(|s| s.ncols() != strong.cols()) {
                return Err(config_err(format!(
                    "strong source {i} has {} columns, strong mixtures have {}",
                    strong.sources[i].ncols(),
                    strong.cols()
                )));
            }
            Some(strong)
        }
        _ => None,
    };
    Ok(TrainingData { weak, adversarial, mixed, strong })
}

/// Loads held-out mixtures and their ground truth.
pub fn load_test_data(cfg: &ExperimentConfig) -> CliResult<Strong> {
    match (&cfg.data.test_mixed, &cfg.data.test_sources) {
        (Some(m), Some(s)) => Ok(Strong { sources: load_all(s, &cfg.stft)?, mixed: load_dataset(m, &cfg.stft)? }),
        _ => Err(config_err("data.test_mixed and data.test_sources are required")),
    }
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub bases: Vec<Basis<f64>>,
    pub traces: Vec<ConvergenceTrace>,
}

fn known_config(tc: &TrainConfig<f64>, known: usize) -> TrainConfig<f64> {
    let mut cfg = tc.clone();
    if cfg.atoms.len() > known {
        cfg.atoms.truncate(known);
    }
    if let Some(s) = cfg.source_sparsity.as_mut() {
        s.truncate(known);
    }
    cfg
}

fn adversarial_pools(
    cfg: &ExperimentConfig,
    data: &TrainingData,
) -> CliResult<Vec<ScaledDataset<f64>>> {
    if let Some(explicit) = &data.adversarial {
        return Ok(explicit
            .iter()
            .map(|a| ScaledDataset { data: a.clone(), lambda_scale: Array1::ones(a.ncols()) })
            .collect());
    }
    let known = data.weak.len();
    let m = data.weak[0].nrows();
    let empty = Array2::<f64>::zeros((m, 0));
    let mut views: Vec<_> = data.weak.iter().map(|u| u.view()).collect();
    if cfg.mode == Variant::Semi {
        views.push(empty.view());
    }
    let counts: Vec<usize> = views.iter().map(|v| v.ncols()).collect();
    let mixed = data.mixed.as_ref();
    let spec = match &cfg.adversarial {
        Some(s) => s.clone(),
        None => AdversarialSpec::proportional(&counts, mixed.map_or(0, |v| v.ncols()))?,
    };
    let mix = MixingSpec::Deterministic(cfg.mixing());
    (0..known)
        .map(|i| Ok(assemble_adversarial(i, &views, mixed.map(|v| v.view()), &spec, &mix)?))
        .collect()
}

/// Trains the bases of every source (and the unknown source in `semi` mode).
pub fn fit(
    cfg: &ExperimentConfig,
    tc: &TrainConfig<f64>,
    data: &TrainingData,
    strong: Option<&Strong>,
) -> CliResult<Fitted> {
    let known = data.weak.len();
    let w = tc.weights;
    let pools = if w.adversarial > 0.0 { Some(adversarial_pools(cfg, data)?) } else { None };
    let extra_weak = if cfg.train.strong_as_weak {
        Some(strong.ok_or_else(|| config_err("train.strong_as_weak needs strong supervision data"))?)
    } else {
        None
    };
    let strong = if w.strong > 0.0 {
        Some(strong.ok_or_else(|| config_err("strong supervision data required"))?)
    } else {
        None
    };
    let weak_data = |i: usize| -> CliResult<Array2<f64>> {
        match extra_weak {
            Some(s) => concatenate(Axis(1), &[data.weak[i].view(), s.sources[i].view()]).map_err(|_| {
                config_err(format!(
                    "source {i}: weak data has {} features, strong data {}",
                    data.weak[i].nrows(),
                    s.sources[i].nrows()
                ))
            }),
            None => Ok(data.weak[i].clone()),
        }
    };
    let sources = (0..known)
        .map(|i| {
            Ok(SourceBundle {
                weak: if w.weak > 0.0 { Some(weak_data(i)?) } else { None },
                adversarial: pools.as_ref().map(|p| p[i].clone()),
                strong: strong.map(|s| s.sources[i].clone()),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let set = TrainingSet { sources, strong_mixed: strong.map(|s| s.mixed.clone()) };
    let known_tc = if cfg.mode == Variant::Semi { known_config(tc, known) } else { tc.clone() };
    let out = train(&set, &known_tc)?;
    let mut fitted = Fitted { bases: out.bases, traces: out.traces };
    if cfg.mode == Variant::Semi {
        let mixed = data.mixed.as_ref().ok_or_else(|| config_err("mode semi needs data.mixed"))?;
        let semi = train_semi_supervised(&fitted.bases, mixed.view(), tc)?;
        fitted.bases.push(semi.basis);
        fitted.traces.push(semi.trace);
    }
    Ok(fitted)
}

/// Separates `test.mixed` and summarizes the per-source PSNR against `test.sources`.
pub fn separate_and_score(
    bases: &[Basis<f64>],
    test: &Strong,
    sep: &SeparationConfig<f64>,
    weights: &[f64],
    peak: f64,
) -> CliResult<MetricReport> {
    if test.sources.len() != bases.len() {
        return Err(config_err(format!(
            "{} ground-truth sources for {} bases",
            test.sources.len(),
            bases.len()
        )));
    }
    let result = separate(bases, test.mixed.view(), sep)?;
    let scores = test
        .sources
        .iter()
        .zip(&result.components)
        .map(|(t, c)| psnr_columns(t.view(), c.view(), peak))
        .collect::<mdnmf::Result<Vec<_>>>()?;
    Ok(aggregate(&scores, weights)?)
}
