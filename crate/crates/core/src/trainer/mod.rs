//! Stochastic multiplicative-update training of per-source bases.
//!
//! One epoch: reshuffle, refresh the mixture codes `H~` against the concatenated dictionary,
//! refresh each source's weak and adversarial codes with a single encoder sweep, run the basis
//! update over all batches, then renormalize the atoms and rescale every code matrix.

mod batch;
pub(crate) mod init;
mod semi;
mod update;

use std::io::Write;
use std::sync::mpsc::Sender;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use batch::{batch_plan, BatchPlan, BatchStrategy, TermKind};
pub use init::{init_exemplar, init_random, InitMode};
pub use semi::{semi_objective, train_semi_supervised, SemiOutput};
pub use update::{w_update_step, BatchTerm, BatchTerms};

use crate::adversarial::ScaledDataset;
use crate::encode::{encode, Encoder};
use crate::error::{Error, Result};
use crate::loss::{full_loss, Term, TermSet, TermWeights};
use crate::model::{normalize_columns, rescale_rows, validate_nonnegative, Basis, EncodeConfig, Latent};
use crate::scalar::Scalar;
use batch::Cursor;
use init::{exemplar_with, random_with, rng_for};

/// Batch sizes per term (`None` = whole dataset) and the sampling strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchConfig {
    pub weak: Option<usize>,
    pub adversarial: Option<usize>,
    pub strong: Option<usize>,
    pub strategy: BatchStrategy,
    /// Term whose data is sampled fully each epoch.
    pub designated: TermKind,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            weak: None,
            adversarial: None,
            strong: None,
            strategy: BatchStrategy::Oversample,
            designated: TermKind::Weak,
        }
    }
}

impl BatchConfig {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn uniform(size: usize) -> Self {
        BatchConfig {
            weak: Some(size),
            adversarial: Some(size),
            strong: Some(size),
            ..Self::default()
        }
    }

    fn sizes(&self) -> [Option<usize>; 3] {
        [self.weak, self.adversarial, self.strong]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct TrainConfig<T> {
    /// Atoms per source; a single entry applies to every source.
    pub atoms: Vec<usize>,
    pub sparsity: T,
    /// Per-source sparsity overriding `sparsity`.
    #[serde(default)]
    pub source_sparsity: Option<Vec<T>>,
    pub gamma: T,
    pub weights: TermWeights<T>,
    pub epochs: usize,
    #[serde(default)]
    pub batch: BatchConfig,
    #[serde(default)]
    pub init: InitMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub entry_floor: Option<T>,
    /// Scale the sparsity of adversarial codes by `sqrt(omega)` per column. `None` enables it
    /// when the sparsity exceeds `1e-6`.
    #[serde(default)]
    pub adversarial_lambda_scaling: Option<bool>,
    /// Train independent sources on separate threads when no strong term couples them.
    #[serde(default = "default_true")]
    pub parallel: bool,
}

fn default_true() -> bool {
    true
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(atoms: usize, weights: TermWeights<T>) -> Self {
        TrainConfig {
            atoms: vec![atoms],
            sparsity: T::of(1e-2),
            source_sparsity: None,
            gamma: T::of(1e-10),
            weights,
            epochs: 50,
            batch: BatchConfig::default(),
            init: InitMode::Exemplar,
            seed: 0,
            entry_floor: None,
            adversarial_lambda_scaling: None,
            parallel: true,
        }
    }

    pub fn atoms_for(&self, source: usize) -> usize {
        if self.atoms.len() == 1 {
            self.atoms[0]
        } else {
            self.atoms[source]
        }
    }

    pub fn sparsity_for(&self, source: usize) -> T {
        self.source_sparsity
            .as_ref()
            .and_then(|s| s.get(source).copied())
            .unwrap_or(self.sparsity)
    }

    pub fn validate(&self, sources: usize) -> Result<()> {
        self.weights.validate()?;
        if !self.gamma.is_finite() || self.gamma <= T::zero() {
            return Err(Error::Config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !self.sparsity.is_finite() || self.sparsity < T::zero() {
            return Err(Error::Config(format!("sparsity must be >= 0, got {}", self.sparsity)));
        }
        if let Some(s) = &self.source_sparsity {
            if s.len() != sources {
                return Err(Error::dim("per-source sparsity", sources, s.len()));
            }
            if s.iter().any(|v| !v.is_finite() || *v < T::zero()) {
                return Err(Error::Config("per-source sparsity must be >= 0".into()));
            }
        }
        if self.atoms.len() != 1 && self.atoms.len() != sources {
            return Err(Error::dim("atoms per source", sources, self.atoms.len()));
        }
        if self.atoms.contains(&0) {
            return Err(Error::Config("every source needs at least one atom".into()));
        }
        if let Some(f) = self.entry_floor {
            if !f.is_finite() || f < T::zero() {
                return Err(Error::Config("entry floor must be >= 0".into()));
            }
        }
        Ok(())
    }

    fn scales_adversarial_sparsity(&self, source: usize) -> bool {
        self.adversarial_lambda_scaling
            .unwrap_or_else(|| self.sparsity_for(source) > T::of(1e-6))
    }

    fn encode_config(&self, source: usize) -> EncodeConfig<T> {
        EncodeConfig::new(self.sparsity_for(source)).with_entry_floor(self.entry_floor)
    }
}

/// Training data for one source.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceBundle<T> {
    /// Samples of this source, `U_i`.
    pub weak: Option<Array2<T>>,
    /// Pooled data this source should represent poorly, `U^_i`.
    pub adversarial: Option<ScaledDataset<T>>,
    /// This source's true component of each strongly supervised mixture, `U~_i`.
    pub strong: Option<Array2<T>>,
}

/// Everything the trainer consumes: per-source bundles plus the strongly supervised mixtures
/// `V~` whose components are the bundles' `strong` matrices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet<T> {
    pub sources: Vec<SourceBundle<T>>,
    pub strong_mixed: Option<Array2<T>>,
}

impl<T: Scalar> TrainingSet<T> {
    fn features(&self) -> Option<usize> {
        self.sources
            .iter()
            .flat_map(|s| {
                [
                    s.weak.as_ref().map(|m| m.nrows()),
                    s.adversarial.as_ref().map(|m| m.data.nrows()),
                    s.strong.as_ref().map(|m| m.nrows()),
                ]
            })
            .flatten()
            .next()
    }

    pub fn validate(&self, weights: &TermWeights<T>) -> Result<usize> {
        if self.sources.is_empty() {
            return Err(Error::Config("training needs at least one source".into()));
        }
        let m = self
            .features()
            .ok_or_else(|| Error::Config("training set contains no data".into()))?;
        let strong_cols = self.strong_mixed.as_ref().map(|v| v.ncols());
        if let Some(v) = &self.strong_mixed {
            if v.nrows() != m {
                return Err(Error::dim("strong mixtures feature dimension", m, v.nrows()));
            }
            validate_nonnegative(v.view(), "strong mixtures")?;
        }
        for (i, s) in self.sources.iter().enumerate() {
            let check = |mat: &Array2<T>, what: &str| -> Result<()> {
                if mat.nrows() != m {
                    return Err(Error::dim("training feature dimension", m, mat.nrows()));
                }
                validate_nonnegative(mat.view(), &format!("source {i} {what}"))
            };
            if let Some(u) = &s.weak {
                check(u, "weak data")?;
            }
            if let Some(a) = &s.adversarial {
                check(&a.data, "adversarial data")?;
                if a.lambda_scale.len() != a.data.ncols() {
                    return Err(Error::dim("adversarial sparsity scale", a.data.ncols(), a.lambda_scale.len()));
                }
            }
            if let Some(st) = &s.strong {
                check(st, "strong components")?;
                if Some(st.ncols()) != strong_cols {
                    return Err(Error::Config(format!(
                        "source {i}: strong components need matching strong mixtures (got {} columns vs {:?})",
                        st.ncols(),
                        strong_cols
                    )));
                }
            }
            if weights.weak > T::zero() && s.weak.is_none() {
                return Err(Error::Config(format!("source {i}: tau_w > 0 requires weak data")));
            }
            if weights.adversarial > T::zero() && s.adversarial.is_none() {
                return Err(Error::Config(format!("source {i}: tau_a > 0 requires adversarial data")));
            }
            if weights.strong > T::zero() && s.strong.is_none() {
                return Err(Error::Config(format!("source {i}: tau_s > 0 requires strong supervision data")));
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub epoch: usize,
    pub loss: f64,
    pub seconds: f64,
}

/// Per-epoch objective values of one source.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    /// Objective before the first epoch.
    pub initial_loss: f64,
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    /// Writes `epoch,loss` rows, epoch 0 holding the initial objective. Timings are left out so
    /// reruns produce identical files; see [`ConvergenceTrace::write_timing_csv`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "loss"])?;
        if self.initial_loss.is_finite() {
            w.write_record(["0".to_string(), format!("{:e}", self.initial_loss)])?;
        }
        for r in &self.records {
            w.write_record([r.epoch.to_string(), format!("{:e}", r.loss)])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Writes `epoch,seconds` rows of cumulative wall time.
    pub fn write_timing_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "seconds"])?;
        for r in &self.records {
            w.write_record([r.epoch.to_string(), format!("{:.6}", r.seconds)])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads the layout of [`ConvergenceTrace::write_csv`]; timings come back as NaN.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut trace = ConvergenceTrace { initial_loss: f64::NAN, records: Vec::new() };
        for row in rdr.records() {
            let row = row?;
            let bad = || Error::Format { format: "trace csv", reason: format!("bad row {row:?}") };
            let epoch: usize = row.get(0).and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
            let loss: f64 = row.get(1).and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
            if epoch == 0 {
                trace.initial_loss = loss;
            } else {
                trace.records.push(TraceRecord { epoch, loss, seconds: f64::NAN });
            }
        }
        Ok(trace)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.loss)
    }

    /// Largest relative increase between consecutive losses (0 when non-increasing).
    pub fn worst_relative_increase(&self) -> f64 {
        let mut losses: Vec<f64> = Vec::with_capacity(self.records.len() + 1);
        if self.initial_loss.is_finite() {
            losses.push(self.initial_loss);
        }
        losses.extend(self.records.iter().map(|r| r.loss));
        losses
            .windows(2)
            .map(|p| (p[1] - p[0]) / p[0].abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Progress event emitted after every epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub source: usize,
    pub record: TraceRecord,
}

#[derive(Debug, Clone)]
pub struct TrainOutput<T> {
    pub bases: Vec<Basis<T>>,
    pub traces: Vec<ConvergenceTrace>,
}

struct Sampler {
    perm: Vec<usize>,
    cursor: Cursor,
}

impl Sampler {
    fn new(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        Sampler { perm, cursor: Cursor { pos: 0 } }
    }

    fn reshuffle(&mut self, rng: &mut ChaCha8Rng) {
        self.perm.shuffle(rng);
    }
}

struct SourceState<T> {
    w: Basis<T>,
    h: Option<Latent<T>>,
    h_adv: Option<Latent<T>>,
    rng: ChaCha8Rng,
    samplers: [Option<Sampler>; 3],
    adv_cfg: EncodeConfig<T>,
    weak_cfg: EncodeConfig<T>,
}

fn select<T: Scalar>(m: ArrayView2<'_, T>, idx: &[usize]) -> Array2<T> {
    m.select(Axis(1), idx)
}

fn source_loss<T: Scalar>(
    st: &SourceState<T>,
    bundle: &SourceBundle<T>,
    strong_codes: Option<&Latent<T>>,
    weights: &TermWeights<T>,
) -> Result<T> {
    let terms = TermSet {
        weak: match (&bundle.weak, &st.h) {
            (Some(u), Some(h)) => Some(Term::new(u.view(), h)),
            _ => None,
        },
        adversarial: match (&bundle.adversarial, &st.h_adv) {
            (Some(a), Some(h)) => Some(Term::new(a.data.view(), h)),
            _ => None,
        },
        strong: match (&bundle.strong, strong_codes) {
            (Some(u), Some(h)) => Some(Term::new(u.view(), h)),
            _ => None,
        },
    };
    full_loss(&st.w, &terms, weights)
}

/// Runs the encoder for a single sweep in place.
fn sweep<T: Scalar>(w: &Basis<T>, data: ArrayView2<'_, T>, h: &mut Latent<T>, cfg: &EncodeConfig<T>) {
    let enc = Encoder::new(w.view(), data, cfg);
    enc.step(h.matrix_mut());
}

#[allow(clippy::too_many_arguments)]
fn run_source_epoch<T: Scalar>(
    st: &mut SourceState<T>,
    bundle: &SourceBundle<T>,
    strong_codes: Option<&Latent<T>>,
    plan: &BatchPlan,
    cfg: &TrainConfig<T>,
) -> Result<()> {
    let weights = cfg.weights;
    if plan.strategy != BatchStrategy::Iterative {
        for s in st.samplers.iter_mut().flatten() {
            s.reshuffle(&mut st.rng);
        }
    }
    if let (Some(u), Some(h)) = (&bundle.weak, st.h.as_mut()) {
        if weights.weak > T::zero() {
            sweep(&st.w, u.view(), h, &st.weak_cfg);
        }
    }
    if let (Some(a), Some(h)) = (&bundle.adversarial, st.h_adv.as_mut()) {
        if weights.adversarial > T::zero() {
            sweep(&st.w, a.data.view(), h, &st.adv_cfg);
        }
    }

    for b in 0..plan.num_batches {
        let mut idx: [Vec<usize>; 3] = Default::default();
        for kind in TermKind::ALL {
            let t = kind.index();
            let Some(sampler) = st.samplers[t].as_mut() else { continue };
            let positions = if plan.strategy == BatchStrategy::Iterative {
                let size = plan.batch_size(kind).expect("sampler implies planned term");
                let (pos, exhausted) = sampler.cursor.next(sampler.perm.len(), size);
                let mapped: Vec<usize> = pos.iter().map(|&p| sampler.perm[p]).collect();
                if exhausted {
                    sampler.reshuffle(&mut st.rng);
                }
                idx[t] = mapped;
                continue;
            } else {
                plan.positions(kind, b)
            };
            idx[t] = positions.iter().map(|&p| sampler.perm[p]).collect();
        }

        let weak_batch = match (&bundle.weak, &st.h) {
            (Some(u), Some(h)) if !idx[0].is_empty() => Some((select(u.view(), &idx[0]), select(h.view(), &idx[0]))),
            _ => None,
        };
        let adv_batch = match (&bundle.adversarial, &st.h_adv) {
            (Some(a), Some(h)) if !idx[1].is_empty() => {
                Some((select(a.data.view(), &idx[1]), select(h.view(), &idx[1])))
            }
            _ => None,
        };
        let strong_batch = match (&bundle.strong, strong_codes) {
            (Some(u), Some(h)) if !idx[2].is_empty() => Some((select(u.view(), &idx[2]), select(h.view(), &idx[2]))),
            _ => None,
        };
        let terms = BatchTerms {
            weak: as_term(&weak_batch),
            adversarial: as_term(&adv_batch),
            strong: as_term(&strong_batch),
        };
        st.w = w_update_step(&st.w, &terms, &weights, cfg.gamma, cfg.entry_floor)?;
    }
    Ok(())
}

fn as_term<T: Scalar>(p: &Option<(Array2<T>, Array2<T>)>) -> Option<BatchTerm<'_, T>> {
    p.as_ref().map(|(d, h)| BatchTerm::new(d.view(), h.view()))
}

/// Fits one basis per source.
pub fn train<T: Scalar>(set: &TrainingSet<T>, cfg: &TrainConfig<T>) -> Result<TrainOutput<T>> {
    train_with_sink(set, cfg, None)
}

/// [`train`] that additionally sends a [`TraceEvent`] after every epoch.
pub fn train_with_sink<T: Scalar>(
    set: &TrainingSet<T>,
    cfg: &TrainConfig<T>,
    sink: Option<Sender<TraceEvent>>,
) -> Result<TrainOutput<T>> {
    let s = set.sources.len();
    cfg.validate(s)?;
    let m = set.validate(&cfg.weights)?;
    let weights = cfg.weights;
    let strong_active = weights.strong > T::zero();

    let sizes_of = |b: &SourceBundle<T>| -> [Option<usize>; 3] {
        [
            b.weak.as_ref().filter(|_| weights.weak > T::zero()).map(|u| u.ncols()),
            b.adversarial.as_ref().filter(|_| weights.adversarial > T::zero()).map(|a| a.cols()),
            b.strong.as_ref().filter(|_| strong_active).map(|u| u.ncols()),
        ]
    };

    let mut plans = Vec::with_capacity(s);
    let mut states = Vec::with_capacity(s);
    for (i, bundle) in set.sources.iter().enumerate() {
        let sizes = sizes_of(bundle);
        let designated = if sizes[cfg.batch.designated.index()].is_some() {
            cfg.batch.designated
        } else {
            TermKind::ALL
                .into_iter()
                .find(|k| sizes[k.index()].is_some())
                .ok_or_else(|| Error::Config(format!("source {i} has no data for any active term")))?
        };
        let plan = batch_plan(sizes, cfg.batch.sizes(), cfg.batch.strategy, designated)?;

        let mut rng = rng_for(cfg.seed, i as u64 + 1);
        let d = cfg.atoms_for(i);
        let w = match cfg.init {
            InitMode::Exemplar => {
                let src = bundle
                    .weak
                    .as_ref()
                    .or(bundle.strong.as_ref())
                    .ok_or_else(|| Error::Config(format!("source {i}: exemplar init needs weak or strong data")))?;
                exemplar_with(src.view(), d, &mut rng)?
            }
            InitMode::Random => random_with(m, d, &mut rng)?,
        };
        let weak_cfg = cfg.encode_config(i);
        let mut adv_cfg = cfg.encode_config(i);
        if let Some(a) = &bundle.adversarial {
            if cfg.scales_adversarial_sparsity(i) {
                adv_cfg = adv_cfg.with_column_sparsity(a.lambda_scale.clone());
            }
        }
        let h = match &bundle.weak {
            Some(u) if weights.weak > T::zero() => Some(encode(&w, u.view(), &weak_cfg, None)?),
            _ => None,
        };
        let h_adv = match &bundle.adversarial {
            Some(a) if weights.adversarial > T::zero() => Some(encode(&w, a.data.view(), &adv_cfg, None)?),
            _ => None,
        };
        let samplers = sizes.map(|n| n.map(|n| Sampler::new(n, &mut rng)));
        states.push(SourceState { w, h, h_adv, rng, samplers, adv_cfg, weak_cfg });
        plans.push(plan);
    }

    // atom offsets of each source inside the concatenated dictionary
    let offsets: Vec<usize> = std::iter::once(0)
        .chain(states.iter().scan(0, |acc, st| {
            *acc += st.w.atoms();
            Some(*acc)
        }))
        .collect();
    let strong_cfg = {
        let pen: Array1<T> = (0..s)
            .flat_map(|i| std::iter::repeat_n(cfg.sparsity_for(i), cfg.atoms_for(i)))
            .collect();
        EncodeConfig::new(cfg.sparsity)
            .with_atom_sparsity(pen)
            .with_entry_floor(cfg.entry_floor)
    };
    let concat = |states: &[SourceState<T>]| -> Result<Basis<T>> {
        Basis::concat(&states.iter().map(|s| s.w.clone()).collect::<Vec<_>>())
    };
    let mut strong_codes: Option<Latent<T>> = match (&set.strong_mixed, strong_active) {
        (Some(v), true) => Some(encode(&concat(&states)?, v.view(), &strong_cfg, None)?),
        _ => None,
    };
    let blocks = |codes: &Option<Latent<T>>| -> Vec<Option<Latent<T>>> {
        (0..s)
            .map(|i| codes.as_ref().map(|h| h.row_block(offsets[i], offsets[i + 1])))
            .collect()
    };

    let mut traces: Vec<ConvergenceTrace> = Vec::with_capacity(s);
    {
        let b = blocks(&strong_codes);
        for (i, st) in states.iter().enumerate() {
            let loss = source_loss(st, &set.sources[i], b[i].as_ref(), &weights)?;
            traces.push(ConvergenceTrace { initial_loss: loss.as_f64(), records: Vec::with_capacity(cfg.epochs) });
        }
    }

    let start = Instant::now();
    for epoch in 1..=cfg.epochs {
        if let (Some(v), Some(h)) = (&set.strong_mixed, strong_codes.as_mut()) {
            let w_all = concat(&states)?;
            sweep(&w_all, v.view(), h, &strong_cfg);
        }
        let strong_blocks = blocks(&strong_codes);

        let work = |(i, st): (usize, &mut SourceState<T>)| -> Result<()> {
            run_source_epoch(st, &set.sources[i], strong_blocks[i].as_ref(), &plans[i], cfg)
        };
        if cfg.parallel && !strong_active && s > 1 {
            states.par_iter_mut().enumerate().map(work).collect::<Result<Vec<_>>>()?;
        } else {
            states.iter_mut().enumerate().map(work).collect::<Result<Vec<_>>>()?;
        }

        for (i, st) in states.iter_mut().enumerate() {
            let mut attached: Vec<&mut Latent<T>> = Vec::new();
            if let Some(h) = st.h.as_mut() {
                attached.push(h);
            }
            if let Some(h) = st.h_adv.as_mut() {
                attached.push(h);
            }
            let norms = normalize_columns(&mut st.w, &mut attached)?;
            if let Some(h) = strong_codes.as_mut() {
                rescale_rows(h, offsets[i], &norms);
            }
        }

        let strong_blocks = blocks(&strong_codes);
        let seconds = start.elapsed().as_secs_f64();
        for (i, st) in states.iter().enumerate() {
            let loss = source_loss(st, &set.sources[i], strong_blocks[i].as_ref(), &weights)?;
            let record = TraceRecord { epoch, loss: loss.as_f64(), seconds };
            traces[i].records.push(record);
            if let Some(tx) = &sink {
                // a dropped receiver only means nobody is listening
                let _ = tx.send(TraceEvent { source: i, record });
            }
        }
        log::debug!(
            "epoch {epoch}: losses {:?}",
            traces.iter().map(|t| t.final_loss().unwrap_or(f64::NAN)).collect::<Vec<_>>()
        );
    }

    Ok(TrainOutput {
        bases: states.into_iter().map(|s| s.w).collect(),
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn rank_one(m: usize, n: usize) -> Array2<f64> {
        let w = Array1::from_shape_fn(m, |i| 1.0 + i as f64 * 0.5);
        let h = Array1::from_shape_fn(n, |j| 0.2 + (j % 5) as f64 * 0.3);
        Array2::from_shape_fn((m, n), |(i, j)| w[i] * h[j])
    }

    #[test]
    fn nmf_fits_rank_one_data() {
        let u = rank_one(6, 20);
        let set = TrainingSet {
            sources: vec![SourceBundle { weak: Some(u.clone()), ..Default::default() }],
            strong_mixed: None,
        };
        let mut cfg = TrainConfig::new(2, TermWeights::new(1.0, 0.0, 0.0));
        cfg.sparsity = 0.0;
        cfg.epochs = 200;
        let out = train(&set, &cfg).unwrap();
        assert!(out.traces[0].final_loss().unwrap() <= 1e-8, "{:?}", out.traces[0].final_loss());
        for n in out.bases[0].column_norms() {
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_adversarial_data_is_rejected() {
        let set = TrainingSet {
            sources: vec![SourceBundle { weak: Some(array![[1.0, 2.0]]), ..Default::default() }],
            strong_mixed: None,
        };
        let cfg = TrainConfig::new(1, TermWeights::new(1.0, 0.5, 0.0));
        assert!(matches!(train(&set, &cfg), Err(Error::Config(_))));
        let cfg = TrainConfig::new(1, TermWeights::new(1.0, 0.0, 1.0));
        assert!(matches!(train(&set, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn zero_epochs_returns_exemplar_basis() {
        let u = array![[1.0, 0.0, 2.0], [0.0, 3.0, 2.0]];
        let set = TrainingSet {
            sources: vec![SourceBundle { weak: Some(u.clone()), ..Default::default() }],
            strong_mixed: None,
        };
        let mut cfg = TrainConfig::new(2, TermWeights::new(1.0, 0.0, 0.0));
        cfg.epochs = 0;
        cfg.seed = 11;
        let out = train(&set, &cfg).unwrap();
        assert!(out.traces[0].records.is_empty());
        assert_eq!(out.bases[0].atoms(), 2);
    }

    #[test]
    fn trace_csv_layout() {
        let t = ConvergenceTrace {
            initial_loss: 2.0,
            records: vec![TraceRecord { epoch: 1, loss: 1.5, seconds: 0.25 }],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "epoch,loss\n0,2e0\n1,1.5e0\n");
        let back = ConvergenceTrace::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.initial_loss, 2.0);
        assert_eq!((back.records[0].epoch, back.records[0].loss), (1, 1.5));
        let mut buf = Vec::new();
        t.write_timing_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,seconds\n1,0.250000\n");
        assert_eq!(t.worst_relative_increase(), 0.0);
    }
}
