//! Semi-supervised fitting: learn the basis of a source without clean samples from mixtures,
//! with the bases of all other sources frozen.

use std::time::Instant;

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;

use super::init::{exemplar_with, random_with, rng_for};
use super::{BatchStrategy, ConvergenceTrace, InitMode, TraceRecord, TrainConfig};
use crate::encode::{encode, Encoder};
use crate::error::{Error, Result};
use crate::model::{normalize_columns, rescale_rows, validate_nonnegative, Basis, EncodeConfig, Latent};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct SemiOutput<T> {
    /// Fitted basis of the unknown source.
    pub basis: Basis<T>,
    /// Codes of all sources (known sources first) for the mixtures.
    pub latent: Latent<T>,
    pub trace: ConvergenceTrace,
}

/// `(1/2 ||V - W H||_F^2 + sum lambda_k |H_k|_1) / N_V` for the concatenated basis.
pub fn semi_objective<T: Scalar>(
    w: &Basis<T>,
    v: ArrayView2<'_, T>,
    h: &Latent<T>,
    penalties: &Array1<T>,
) -> Result<T> {
    let recon = w.reconstruct(h)?;
    if recon.dim() != v.dim() {
        return Err(Error::dim("semi objective", format!("{:?}", v.dim()), format!("{:?}", recon.dim())));
    }
    let fit = Zip::from(&recon).and(v).fold(T::zero(), |a, &r, &x| a + (x - r) * (x - r));
    let pen = h
        .matrix()
        .axis_iter(Axis(0))
        .zip(penalties.iter())
        .fold(T::zero(), |a, (row, &l)| a + l * row.sum());
    Ok((T::of(0.5) * fit + pen) / T::from_usize(v.ncols()).expect("count fits scalar"))
}

/// Fits `W_S` for the last source of a mixture whose other sources have the frozen `known`
/// bases. Uses `cfg.atoms_for(known.len())` atoms, `cfg.sparsity_for(i)` for source `i`
/// (known sources first), `cfg.batch.weak` as the mixture batch size and `cfg.gamma`.
pub fn train_semi_supervised<T: Scalar>(
    known: &[Basis<T>],
    mixed: ArrayView2<'_, T>,
    cfg: &TrainConfig<T>,
) -> Result<SemiOutput<T>> {
    let s = known.len() + 1;
    cfg.validate(s)?;
    validate_nonnegative(mixed, "mixtures")?;
    let m = mixed.nrows();
    for (i, b) in known.iter().enumerate() {
        if b.features() != m {
            return Err(Error::Dimension {
                context: "semi-supervised known basis",
                expected: m.to_string(),
                actual: format!("{} (source {i})", b.features()),
            });
        }
    }
    let n = mixed.ncols();
    let d = cfg.atoms_for(known.len());
    let mut rng = rng_for(cfg.seed, s as u64 + 1);
    let mut unknown = match cfg.init {
        InitMode::Exemplar => exemplar_with(mixed, d, &mut rng)?,
        InitMode::Random => random_with(m, d, &mut rng)?,
    };

    let mut parts: Vec<Basis<T>> = known.to_vec();
    parts.push(unknown.clone());
    let offset: usize = known.iter().map(|b| b.atoms()).sum();
    let penalties: Array1<T> = parts
        .iter()
        .enumerate()
        .flat_map(|(i, b)| std::iter::repeat_n(cfg.sparsity_for(i), b.atoms()))
        .collect();
    let enc_cfg = EncodeConfig::new(cfg.sparsity)
        .with_atom_sparsity(penalties.clone())
        .with_entry_floor(cfg.entry_floor);

    let mut w_all = Basis::concat(&parts)?;
    let mut h = encode(&w_all, mixed, &enc_cfg, None)?;
    let mut trace = ConvergenceTrace {
        initial_loss: semi_objective(&w_all, mixed, &h, &penalties)?.as_f64(),
        records: Vec::with_capacity(cfg.epochs),
    };

    let batch = cfg.batch.weak.unwrap_or(n).clamp(1, n);
    let batches = n.div_ceil(batch);
    let mut perm: Vec<usize> = (0..n).collect();
    let gamma = cfg.gamma;
    let start = Instant::now();

    for epoch in 1..=cfg.epochs {
        if cfg.batch.strategy != BatchStrategy::Iterative || epoch == 1 {
            perm.shuffle(&mut rng);
        }
        Encoder::new(w_all.view(), mixed, &enc_cfg).step(h.matrix_mut());

        for b in 0..batches {
            let idx = &perm[b * batch..((b + 1) * batch).min(n)];
            let vb = mixed.select(Axis(1), idx);
            let hb = h.view().select(Axis(1), idx);
            let hs = hb.slice(s![offset.., ..]);
            let recon = w_all.view().dot(&hb);
            let scale = T::one() / T::from_usize(idx.len()).expect("count fits scalar");
            let numer = vb.dot(&hs.t()) * scale;
            let denom = recon.dot(&hs.t()) * scale;
            let mut next: Array2<T> = unknown.matrix().clone();
            Zip::from(&mut next).and(&numer).and(&denom).for_each(|x, &nu, &de| {
                let mut val = *x * nu / (de + gamma);
                if let Some(f) = cfg.entry_floor {
                    val = val.max(f);
                }
                *x = val;
            });
            unknown = Basis::from_trusted(next);
            w_all.matrix_mut().slice_mut(s![.., offset..]).assign(unknown.matrix());
        }

        let norms = normalize_columns(&mut unknown, &mut [])?;
        rescale_rows(&mut h, offset, &norms);
        w_all.matrix_mut().slice_mut(s![.., offset..]).assign(unknown.matrix());

        let loss = semi_objective(&w_all, mixed, &h, &penalties)?;
        trace.records.push(TraceRecord { epoch, loss: loss.as_f64(), seconds: start.elapsed().as_secs_f64() });
    }

    Ok(SemiOutput { basis: unknown, latent: h, trace })
}
