//! The JSON experiment description shared by every command.

use std::path::{Path, PathBuf};

use mdnmf::adversarial::AdversarialSpec;
use mdnmf::audio::StftConfig;
use mdnmf::trainer::{BatchConfig, InitMode, TrainConfig};
use mdnmf::tuning::SearchSpace;
use mdnmf::variant::{Variant, WeightOverrides};
use mdnmf::SeparationConfig;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliResult};

/// One or more files whose columns are concatenated in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dataset {
    One(PathBuf),
    Many(Vec<PathBuf>),
}

impl Dataset {
    pub fn paths(&self) -> &[PathBuf] {
        match self {
            Dataset::One(p) => std::slice::from_ref(p),
            Dataset::Many(v) => v,
        }
    }

    fn paths_mut(&mut self) -> &mut [PathBuf] {
        match self {
            Dataset::One(p) => std::slice::from_mut(p),
            Dataset::Many(v) => v,
        }
    }
}

/// Input data. Source lists are ordered by source index; in `semi` mode `sources` holds the
/// known sources only and `mixed` the mixtures the last basis is fitted to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    /// Weak supervision `U_i`.
    pub sources: Vec<Dataset>,
    /// Explicit adversarial data per source, used unscaled instead of the assembled pool.
    pub adversarial: Option<Vec<Dataset>>,
    /// Mixtures `V` entering the adversarial pool (and the semi-supervised fit).
    pub mixed: Option<Dataset>,
    /// Mixing weights of `mixed`; uniform when absent.
    pub mixing: Option<Vec<f64>>,
    /// Strong supervision: components `U~_i` and their mixtures `V~`.
    pub strong_sources: Option<Vec<Dataset>>,
    pub strong_mixed: Option<Dataset>,
    /// Held-out mixtures and their ground-truth components.
    pub test_mixed: Option<Dataset>,
    pub test_sources: Option<Vec<Dataset>>,
    /// Trained bases for `separate`.
    pub bases: Option<Vec<PathBuf>>,
}

impl DataPaths {
    fn all_paths_mut(&mut self) -> Vec<&mut PathBuf> {
        let mut out: Vec<&mut PathBuf> = Vec::new();
        let lists = [&mut self.adversarial, &mut self.strong_sources, &mut self.test_sources];
        for d in self.sources.iter_mut() {
            out.extend(d.paths_mut().iter_mut());
        }
        for list in lists.into_iter().flatten() {
            for d in list.iter_mut() {
                out.extend(d.paths_mut().iter_mut());
            }
        }
        for d in [&mut self.mixed, &mut self.strong_mixed, &mut self.test_mixed].into_iter().flatten() {
            out.extend(d.paths_mut().iter_mut());
        }
        if let Some(b) = self.bases.as_mut() {
            out.extend(b.iter_mut());
        }
        out
    }
}

/// Training settings; weights are overrides of the mode preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Atoms per source; one entry applies to all. In `semi` mode the last entry is the
    /// unknown source's.
    pub atoms: Vec<usize>,
    pub sparsity: f64,
    pub source_sparsity: Option<Vec<f64>>,
    pub gamma: f64,
    pub weights: WeightOverrides<f64>,
    /// Defaults to 50, or 0 in `enmf` mode.
    pub epochs: Option<usize>,
    pub batch: BatchConfig,
    /// Defaults to the mode's initialization.
    pub init: Option<InitMode>,
    pub entry_floor: Option<f64>,
    pub adversarial_lambda_scaling: Option<bool>,
    pub parallel: bool,
    /// Appends the strong-supervision components of each source to its weak data.
    pub strong_as_weak: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            atoms: vec![16],
            sparsity: 1e-2,
            source_sparsity: None,
            gamma: 1e-10,
            weights: WeightOverrides::default(),
            epochs: None,
            batch: BatchConfig::default(),
            init: None,
            entry_floor: None,
            adversarial_lambda_scaling: None,
            parallel: true,
            strong_as_weak: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Variant,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub data: DataPaths,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub separation: SeparationConfig<f64>,
    #[serde(default)]
    pub search: SearchSpace,
    /// Per-source weights of the aggregate score; uniform when absent.
    #[serde(default)]
    pub metric_weights: Option<Vec<f64>>,
    /// Peak value for PSNR.
    #[serde(default = "default_peak")]
    pub peak: f64,
    /// Adversarial pool weights; data-proportional when absent.
    #[serde(default)]
    pub adversarial: Option<AdversarialSpec<f64>>,
    #[serde(default)]
    pub stft: StftConfig,
}

fn default_peak() -> f64 {
    1.0
}

impl ExperimentConfig {
    /// Parses `path`, resolves relative data paths against its directory and validates.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in cfg.data.all_paths_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks mode consistency and that every referenced path exists.
    pub fn validate(&mut self) -> CliResult<()> {
        self.train_config()?;
        for p in self.data.clone().all_paths_mut() {
            if !p.exists() {
                return Err(config_err(format!("data path {} does not exist", p.display())));
            }
        }
        if !(self.peak > 0.0 && self.peak.is_finite()) {
            return Err(config_err(format!("peak must be > 0, got {}", self.peak)));
        }
        self.stft.validate()?;
        self.search.validate()?;
        Ok(())
    }

    /// The training configuration with the mode preset and overrides applied.
    pub fn train_config(&self) -> CliResult<TrainConfig<f64>> {
        let t = &self.train;
        let weights = self.mode.resolve(&t.weights)?;
        let mut cfg = TrainConfig::new(1, weights);
        cfg.atoms = t.atoms.clone();
        cfg.sparsity = t.sparsity;
        cfg.source_sparsity = t.source_sparsity.clone();
        cfg.gamma = t.gamma;
        cfg.epochs = t.epochs.unwrap_or(if self.mode == Variant::Enmf { 0 } else { 50 });
        cfg.batch = t.batch.clone();
        cfg.init = t.init.unwrap_or(self.mode.default_init());
        cfg.seed = self.seed;
        cfg.entry_floor = t.entry_floor;
        cfg.adversarial_lambda_scaling = t.adversarial_lambda_scaling;
        cfg.parallel = t.parallel;
        self.mode.check_config(&cfg)?;
        Ok(cfg)
    }

    /// Number of sources the bases describe (known sources plus one in `semi` mode).
    pub fn source_count(&self) -> usize {
        self.data.sources.len() + usize::from(self.mode == Variant::Semi)
    }

    /// Checks that the data needed by the configured training terms is present.
    pub fn require_training_data(&self) -> CliResult<()> {
        let w = self.train_config()?.weights;
        let d = &self.data;
        if d.sources.is_empty() {
            return Err(config_err("data.sources must list at least one source"));
        }
        if self.mode != Variant::Semi && d.sources.len() < 2 && w.strong == 0.0 && w.adversarial == 0.0 {
            log::warn!("training a single source without adversarial or strong data");
        }
        if w.adversarial > 0.0 && d.mixed.is_none() && d.adversarial.is_none() {
            return Err(config_err(format!(
                "mode {} needs adversarial data: set data.mixed or data.adversarial",
                self.mode
            )));
        }
        if let Some(a) = &d.adversarial {
            if a.len() != d.sources.len() {
                return Err(config_err(format!(
                    "data.adversarial lists {} datasets for {} sources",
                    a.len(),
                    d.sources.len()
                )));
            }
        }
        if self.train.strong_as_weak {
            if w.weak == 0.0 {
                return Err(config_err(format!("train.strong_as_weak needs a weak term, mode {} has none", self.mode)));
            }
            if d.strong_sources.is_none() {
                return Err(config_err("train.strong_as_weak needs data.strong_sources"));
            }
        }
        if self.mode == Variant::Semi && d.mixed.is_none() {
            return Err(config_err("mode semi needs the mixtures in data.mixed"));
        }
        if w.strong > 0.0 {
            match (&d.strong_sources, &d.strong_mixed) {
                (Some(s), Some(_)) if s.len() == d.sources.len() => {}
                (Some(s), Some(_)) => {
                    return Err(config_err(format!(
                        "data.strong_sources lists {} datasets for {} sources",
                        s.len(),
                        d.sources.len()
                    )))
                }
                _ => {
                    return Err(config_err(format!(
                        "mode {} needs data.strong_sources and data.strong_mixed",
                        self.mode
                    )))
                }
            }
        }
        if let Some(m) = &d.mixing {
            let expected = self.source_count();
            if m.len() != expected {
                return Err(config_err(format!("data.mixing has {} weights for {expected} sources", m.len())));
            }
        }
        Ok(())
    }

    /// Metric weights, uniform by default.
    pub fn metric_weights(&self, sources: usize) -> CliResult<Vec<f64>> {
        match &self.metric_weights {
            Some(w) if w.len() == sources => Ok(w.clone()),
            Some(w) => Err(config_err(format!("metric_weights has {} entries for {sources} sources", w.len()))),
            None => Ok(vec![1.0; sources]),
        }
    }

    /// Mixing weights of `data.mixed`, uniform by default.
    pub fn mixing(&self) -> Vec<f64> {
        let s = self.source_count();
        self.data.mixing.clone().unwrap_or_else(|| vec![1.0 / s as f64; s])
    }
}
